//! Correlation-threshold feature retention and single-linkage clustering of
//! the correlated remainder.
//!
//! The procedure: features whose absolute Pearson correlation with every
//! other feature stays below the threshold are retained as-is
//! ([`partition_by_threshold`]); the rest are clustered by agglomerative
//! single linkage on the distance d = 1 − |r| and the dendrogram is cut at
//! the configured distance ([`single_linkage_clusters`]). Picking one
//! representative per cluster is a recorded human step: the tool emits the
//! report and consumes a picks file, it never picks automatically.
//!
//! Picks file format: `cluster_id<TAB>feature_name`, cluster ids as emitted
//! in the report (0-based).

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexfeat::FeatureMatrix;

/// Symmetric Pearson correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// Row-major, names.len() × names.len().
    pub values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.names.len() + j]
    }

    /// Sub-matrix restricted to `subset` (indices into `names`).
    pub fn subset(&self, subset: &[usize]) -> CorrelationMatrix {
        let names = subset.iter().map(|&i| self.names[i].clone()).collect();
        let mut values = Vec::with_capacity(subset.len() * subset.len());
        for &i in subset {
            for &j in subset {
                values.push(self.get(i, j));
            }
        }
        CorrelationMatrix { names, values }
    }
}

/// Clusters over the correlated features, with the (initially unset)
/// representative picks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// Each cluster's member feature names, sorted; clusters ordered
    /// lexicographically by their smallest member.
    pub clusters: Vec<Vec<String>>,
    pub cut_distance: f64,
    /// One representative per cluster once finalized from the picks file.
    pub picks: Vec<Option<String>>,
}

/// Pairwise Pearson correlations between all feature columns.
///
/// Requires at least two items; zero-variance columns must have been dropped
/// upstream (standardization does this) and are an error here.
pub fn correlation_matrix(matrix: &FeatureMatrix) -> Result<CorrelationMatrix> {
    let n = matrix.n_items();
    if n < 2 {
        return Err(Error::Validation(
            "correlation requires at least two items".into(),
        ));
    }
    let p = matrix.n_features();
    let columns: Vec<Vec<f64>> = (0..p).map(|c| matrix.column(c)).collect();
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut norms: Vec<f64> = Vec::with_capacity(p);
    for (c, col) in columns.iter().enumerate() {
        let mean = crate::math::mean(col);
        let centered_col: Vec<f64> = col.iter().map(|x| x - mean).collect();
        let norm = centered_col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Validation(format!(
                "feature `{}` has zero variance; drop constant columns before correlation",
                matrix.names[c]
            )));
        }
        centered.push(centered_col);
        norms.push(norm);
    }
    let mut values = vec![0.0; p * p];
    let rows: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; p];
            for j in 0..p {
                row[j] = if i == j {
                    1.0
                } else {
                    let dot: f64 = centered[i]
                        .iter()
                        .zip(&centered[j])
                        .map(|(a, b)| a * b)
                        .sum();
                    dot / (norms[i] * norms[j])
                };
            }
            row
        })
        .collect();
    for (i, row) in rows.into_iter().enumerate() {
        values[i * p..(i + 1) * p].copy_from_slice(&row);
    }
    Ok(CorrelationMatrix {
        names: matrix.names.clone(),
        values,
    })
}

/// Split features into the independent set (max |r| with any other feature
/// below `threshold`) and the clustered remainder.
pub fn partition_by_threshold(
    corr: &CorrelationMatrix,
    threshold: f64,
) -> (Vec<String>, Vec<String>) {
    assert!(threshold > 0.0 && threshold < 1.0);
    let p = corr.names.len();
    let mut independent = Vec::new();
    let mut clustered = Vec::new();
    for i in 0..p {
        let max_abs = (0..p)
            .filter(|&j| j != i)
            .map(|j| corr.get(i, j).abs())
            .fold(0.0f64, f64::max);
        if max_abs < threshold {
            independent.push(corr.names[i].clone());
        } else {
            clustered.push(corr.names[i].clone());
        }
    }
    (independent, clustered)
}

/// Agglomerative single-linkage clustering on d = 1 − |r|, cut at
/// `cut_distance`: two features end up in one cluster exactly when a chain
/// of merges below the cut connects them.
///
/// The result is invariant to feature order (names are sorted first) and
/// clusters are emitted lexicographically by smallest member.
pub fn single_linkage_clusters(corr: &CorrelationMatrix, cut_distance: f64) -> ClusterReport {
    let mut order: Vec<usize> = (0..corr.names.len()).collect();
    order.sort_by(|&a, &b| corr.names[a].cmp(&corr.names[b]));

    // Single linkage cut at h equals connected components over edges with
    // d < h; a union-find over the sorted order keeps merges deterministic.
    let n = order.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let d = 1.0 - corr.get(order[a], order[b]).abs();
            if d < cut_distance {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    parent[rb.max(ra)] = rb.min(ra);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (a, &orig) in order.iter().enumerate() {
        let root = find(&mut parent, a);
        groups.entry(root).or_default().push(corr.names[orig].clone());
    }
    let mut clusters: Vec<Vec<String>> = groups
        .into_values()
        .map(|mut members| {
            members.sort();
            members
        })
        .collect();
    clusters.sort_by(|a, b| a[0].cmp(&b[0]));
    let picks = vec![None; clusters.len()];
    ClusterReport {
        clusters,
        cut_distance,
        picks,
    }
}

impl ClusterReport {
    /// Human-readable cluster listing.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} clusters at cut distance {}\n",
            self.clusters.len(),
            self.cut_distance
        );
        for (i, members) in self.clusters.iter().enumerate() {
            let pick = match &self.picks[i] {
                Some(p) => format!(" -> pick: {p}"),
                None => String::new(),
            };
            out.push_str(&format!("cluster {i} ({} members){pick}\n", members.len()));
            for m in members {
                out.push_str(&format!("  {m}\n"));
            }
        }
        out
    }

    /// Apply a picks file (`cluster_id<TAB>feature_name` rows).
    pub fn with_picks(&self, src: &str, file: &str) -> Result<ClusterReport> {
        let mut report = self.clone();
        for (idx, raw) in src.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, name) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(file, lineno, "expected `cluster_id<TAB>feature`"))?;
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| Error::parse(file, lineno, format!("bad cluster id `{id}`")))?;
            if id >= report.clusters.len() {
                return Err(Error::parse(
                    file,
                    lineno,
                    format!("cluster {id} does not exist ({} clusters)", report.clusters.len()),
                ));
            }
            let name = name.trim();
            if report.picks[id].is_some() {
                return Err(Error::parse(file, lineno, format!("duplicate pick for cluster {id}")));
            }
            report.picks[id] = Some(name.to_string());
        }
        Ok(report)
    }
}

/// Reduce the matrix to the independent features plus one picked
/// representative per cluster. Returns the reduced matrix and the dropped
/// features with the cluster (and pick) that absorbed them.
/// Provenance entry for a feature dropped by selection:
/// (dropped feature, cluster index, chosen representative).
pub type DroppedFeature = (String, usize, String);

pub fn apply_selection(
    matrix: &FeatureMatrix,
    report: &ClusterReport,
    independent: &[String],
) -> Result<(FeatureMatrix, Vec<DroppedFeature>)> {
    let mut picks: Vec<String> = Vec::with_capacity(report.clusters.len());
    for (i, (members, pick)) in report.clusters.iter().zip(&report.picks).enumerate() {
        let pick = pick
            .as_ref()
            .ok_or_else(|| Error::Validation(format!("cluster {i} has no representative pick")))?;
        if !members.contains(pick) {
            return Err(Error::Validation(format!(
                "pick `{pick}` is not a member of cluster {i}"
            )));
        }
        picks.push(pick.clone());
    }
    let pick_set: BTreeSet<&String> = picks.iter().collect();
    if pick_set.len() != picks.len() {
        return Err(Error::Validation("the same feature picked for two clusters".into()));
    }

    let mut keep: Vec<String> = independent.to_vec();
    keep.extend(picks.iter().cloned());
    keep.sort();
    let reduced = matrix.select_columns(&keep)?;

    let mut provenance = Vec::new();
    for (i, members) in report.clusters.iter().enumerate() {
        for m in members {
            if m != &picks[i] {
                provenance.push((m.clone(), i, picks[i].clone()));
            }
        }
    }
    Ok((reduced, provenance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ItemId;
    use std::collections::BTreeMap;

    fn matrix_from_columns(names: &[&str], cols: &[Vec<f64>]) -> FeatureMatrix {
        let n = cols[0].len();
        let mut values = Vec::new();
        for r in 0..n {
            for col in cols {
                values.push(col[r]);
            }
        }
        FeatureMatrix::new_raw(
            (0..n).map(|i| ItemId(format!("i{i}"))).collect(),
            names.iter().map(|s| s.to_string()).collect(),
            values,
            BTreeMap::new(),
        )
        .with_state(crate::lexfeat::MatrixState::Standardized)
    }

    #[test]
    fn perfect_correlations() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let m = matrix_from_columns(&["x", "double", "neg"], &[x, x2, neg]);
        let corr = correlation_matrix(&m).unwrap();
        assert!((corr.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((corr.get(0, 2) + 1.0).abs() < 1e-12);
        assert!((corr.get(1, 2) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_half() {
        let m = matrix_from_columns(&["x", "y"], &[vec![1.0, 2.0, 3.0], vec![1.0, 3.0, 2.0]]);
        let corr = correlation_matrix(&m).unwrap();
        assert!((corr.get(0, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_items_error() {
        let m = matrix_from_columns(&["x"], &[vec![1.0]]);
        assert!(correlation_matrix(&m).is_err());
    }

    #[test]
    fn partition_orthogonal_vs_pair() {
        // x and y strongly correlated, z essentially orthogonal.
        let x = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = vec![1.1, 2.2, 2.9, 4.2, 4.9, 6.1];
        let z = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let m = matrix_from_columns(&["x", "y", "z"], &[x, y, z]);
        let corr = correlation_matrix(&m).unwrap();
        let (independent, clustered) = partition_by_threshold(&corr, 0.5);
        assert_eq!(independent, vec!["z".to_string()]);
        assert_eq!(clustered, vec!["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn single_linkage_chain_merges() {
        // A-B and B-C close, A-C far: single linkage still joins all three.
        let names = vec!["A".to_string(), "B".to_string(), "C".to_string()];
        #[rustfmt::skip]
        let values = vec![
            1.0, 0.8, 0.1,
            0.8, 1.0, 0.8,
            0.1, 0.8, 1.0,
        ];
        let corr = CorrelationMatrix { names, values };
        let report = single_linkage_clusters(&corr, 0.5);
        assert_eq!(report.clusters.len(), 1);
        assert_eq!(report.clusters[0], vec!["A", "B", "C"]);
    }

    #[test]
    fn weak_correlations_stay_singletons() {
        let names = vec!["A".to_string(), "B".to_string(), "C".to_string()];
        #[rustfmt::skip]
        let values = vec![
            1.0, 0.3, 0.2,
            0.3, 1.0, 0.4,
            0.2, 0.4, 1.0,
        ];
        let corr = CorrelationMatrix { names, values };
        let report = single_linkage_clusters(&corr, 0.5);
        assert_eq!(report.clusters.len(), 3);
    }

    #[test]
    fn pair_plus_singleton() {
        let names = vec!["A".to_string(), "B".to_string(), "C".to_string()];
        #[rustfmt::skip]
        let values = vec![
            1.0, 0.9, 0.05,
            0.9, 1.0, 0.02,
            0.05, 0.02, 1.0,
        ];
        let corr = CorrelationMatrix { names, values };
        let report = single_linkage_clusters(&corr, 0.5);
        assert_eq!(report.clusters, vec![vec!["A", "B"], vec!["C"]]);
    }

    #[test]
    fn order_invariance() {
        let build = |names: [&str; 3], values: [f64; 9]| CorrelationMatrix {
            names: names.iter().map(|s| s.to_string()).collect(),
            values: values.to_vec(),
        };
        let a = build(["A", "B", "C"], [1.0, 0.9, 0.1, 0.9, 1.0, 0.2, 0.1, 0.2, 1.0]);
        // same data with B first
        let b = build(["B", "A", "C"], [1.0, 0.9, 0.2, 0.9, 1.0, 0.1, 0.2, 0.1, 1.0]);
        assert_eq!(single_linkage_clusters(&a, 0.5).clusters, single_linkage_clusters(&b, 0.5).clusters);
    }

    #[test]
    fn apply_selection_counts_and_errors() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| v * 2.0 + 0.01).collect();
        let z = vec![1.0, -1.0, 1.0, -1.0];
        let m = matrix_from_columns(&["x", "y", "z"], &[x, y, z]);
        let corr = correlation_matrix(&m).unwrap();
        let (independent, clustered) = partition_by_threshold(&corr, 0.5);
        let sub: Vec<usize> = clustered
            .iter()
            .map(|n| corr.names.iter().position(|c| c == n).unwrap())
            .collect();
        let report = single_linkage_clusters(&corr.subset(&sub), 0.5);
        assert_eq!(report.clusters.len(), 1);

        // missing pick is an error naming the cluster
        let err = apply_selection(&m, &report, &independent).unwrap_err();
        assert!(err.to_string().contains("cluster 0"), "{err}");

        // pick outside the cluster is an error
        let mut bad = report.clone();
        bad.picks[0] = Some("z".to_string());
        assert!(apply_selection(&m, &bad, &independent).is_err());

        let with_picks = report.with_picks("0\tx\n", "picks").unwrap();
        let (reduced, dropped) = apply_selection(&m, &with_picks, &independent).unwrap();
        assert_eq!(reduced.names, vec!["x".to_string(), "z".to_string()]);
        assert_eq!(dropped, vec![("y".to_string(), 0, "x".to_string())]);
    }

    #[test]
    fn partition_and_clusters_cover_everything() {
        let x = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
        let y = vec![2.0, 7.0, 1.0, 8.0, 2.0, 8.0];
        let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + 0.1 * b).collect();
        let m = matrix_from_columns(&["x", "y", "xy"], &[x, y, xy]);
        let corr = correlation_matrix(&m).unwrap();
        let (independent, clustered) = partition_by_threshold(&corr, 0.5);
        let all: BTreeSet<String> = independent.iter().chain(&clustered).cloned().collect();
        assert_eq!(all.len(), 3);
    }
}
