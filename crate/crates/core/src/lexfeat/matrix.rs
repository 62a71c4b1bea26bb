//! The items × features matrix and its normalization/standardization states.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::ItemId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixState {
    Raw,
    TokenNormalized,
    Standardized,
}

/// Mean/sd recorded when a column is standardized; needed to place
/// prediction-grid points back on the original feature scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
}

/// Dense row-major items × features matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub item_ids: Vec<ItemId>,
    pub names: Vec<String>,
    values: Vec<f64>,
    pub state: MatrixState,
    /// Per-column standardization stats, populated by [`standardize`].
    pub column_stats: Option<Vec<ColumnStats>>,
    /// Extraction-quality flags per item.
    pub flags: BTreeMap<ItemId, BTreeSet<String>>,
}

impl FeatureMatrix {
    pub fn new_raw(
        item_ids: Vec<ItemId>,
        names: Vec<String>,
        values: Vec<f64>,
        flags: BTreeMap<ItemId, BTreeSet<String>>,
    ) -> Self {
        assert_eq!(item_ids.len() * names.len(), values.len());
        FeatureMatrix {
            item_ids,
            names,
            values,
            state: MatrixState::Raw,
            column_stats: None,
            flags,
        }
    }

    #[cfg(test)]
    pub(crate) fn with_state(mut self, state: MatrixState) -> Self {
        self.state = state;
        self
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.names.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.names.len() + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_items()).map(|r| self.get(r, col)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Divide every feature in `count_features` by the item's word-token
    /// count (the `n_tokens` column). Non-count features are untouched.
    pub fn normalize_counts(&self, count_features: &BTreeSet<String>) -> Result<FeatureMatrix> {
        if self.state != MatrixState::Raw {
            return Err(Error::Validation(
                "normalize_counts expects a raw feature matrix".into(),
            ));
        }
        let token_col = self
            .column_index("n_tokens")
            .ok_or_else(|| Error::Validation("matrix lacks the n_tokens column".into()))?;
        for name in count_features {
            if self.column_index(name).is_none() {
                return Err(Error::Config(format!("count feature `{name}` not in matrix")));
            }
        }
        let mut values = self.values.clone();
        let w = self.names.len();
        let normalize: Vec<bool> = self.names.iter().map(|n| count_features.contains(n)).collect();
        for (r, item_id) in self.item_ids.iter().enumerate() {
            let n_tokens = self.get(r, token_col);
            if n_tokens <= 0.0 {
                return Err(Error::Validation(format!(
                    "item {item_id} has n_tokens = {n_tokens}; zero-token items must be excluded upstream"
                )));
            }
            for (c, flag) in normalize.iter().enumerate() {
                if *flag {
                    values[r * w + c] /= n_tokens;
                }
            }
        }
        Ok(FeatureMatrix {
            item_ids: self.item_ids.clone(),
            names: self.names.clone(),
            values,
            state: MatrixState::TokenNormalized,
            column_stats: None,
            flags: self.flags.clone(),
        })
    }

    /// Z-score each column (population sd), dropping constant columns.
    /// Returns the standardized matrix and the dropped column names.
    ///
    /// Standardizing an already standardized matrix is a no-op up to
    /// floating-point roundoff.
    pub fn standardize(&self) -> Result<(FeatureMatrix, Vec<String>)> {
        if self.state == MatrixState::Raw {
            return Err(Error::Validation(
                "standardize expects a token-normalized matrix".into(),
            ));
        }
        let n = self.n_items();
        if n == 0 {
            return Err(Error::Validation("cannot standardize an empty matrix".into()));
        }
        let mut kept: Vec<usize> = Vec::new();
        let mut dropped: Vec<String> = Vec::new();
        let mut stats: Vec<ColumnStats> = Vec::new();
        for (c, name) in self.names.iter().enumerate() {
            let col = self.column(c);
            let mean = crate::math::mean(&col);
            let sd = crate::math::sd_population(&col);
            if sd == 0.0 {
                dropped.push(name.clone());
            } else {
                kept.push(c);
                stats.push(ColumnStats {
                    name: name.clone(),
                    mean,
                    sd,
                });
            }
        }
        let mut values = Vec::with_capacity(n * kept.len());
        for r in 0..n {
            for (k, &c) in kept.iter().enumerate() {
                values.push((self.get(r, c) - stats[k].mean) / stats[k].sd);
            }
        }
        // Compose with prior standardization stats so the recorded mean/sd
        // always map back to the token-normalized scale.
        let stats = match (&self.column_stats, self.state) {
            (Some(prev), MatrixState::Standardized) => stats
                .iter()
                .map(|s| {
                    let p = prev
                        .iter()
                        .find(|p| p.name == s.name)
                        .expect("standardized column has prior stats");
                    ColumnStats {
                        name: s.name.clone(),
                        mean: p.mean + s.mean * p.sd,
                        sd: p.sd * s.sd,
                    }
                })
                .collect(),
            _ => stats,
        };
        let names = kept.iter().map(|&c| self.names[c].clone()).collect();
        Ok((
            FeatureMatrix {
                item_ids: self.item_ids.clone(),
                names,
                values,
                state: MatrixState::Standardized,
                column_stats: Some(stats),
                flags: self.flags.clone(),
            },
            dropped,
        ))
    }

    /// Keep only the named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureMatrix> {
        let mut cols = Vec::with_capacity(names.len());
        for name in names {
            cols.push(
                self.column_index(name)
                    .ok_or_else(|| Error::Config(format!("unknown feature `{name}`")))?,
            );
        }
        let mut values = Vec::with_capacity(self.n_items() * cols.len());
        for r in 0..self.n_items() {
            for &c in &cols {
                values.push(self.get(r, c));
            }
        }
        let column_stats = self.column_stats.as_ref().map(|stats| {
            cols.iter().map(|&c| {
                stats
                    .iter()
                    .find(|s| s.name == self.names[c])
                    .expect("stats recorded per kept column")
                    .clone()
            })
            .collect()
        });
        Ok(FeatureMatrix {
            item_ids: self.item_ids.clone(),
            names: names.to_vec(),
            values,
            state: self.state,
            column_stats,
            flags: self.flags.clone(),
        })
    }

    /// Tab-separated export with an `item_id` first column.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("item_id");
        for name in &self.names {
            out.push('\t');
            out.push_str(name);
        }
        out.push('\n');
        for (r, id) in self.item_ids.iter().enumerate() {
            out.push_str(&id.0);
            for c in 0..self.names.len() {
                out.push('\t');
                out.push_str(&format_float(self.get(r, c)));
            }
            out.push('\n');
        }
        out
    }

    /// Sidecar metadata: state, flags, and per-column standardization stats.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "state": self.state,
            "column_stats": self.column_stats,
            "flags": self.flags.iter().map(|(id, flags)| {
                (id.0.clone(), flags.iter().cloned().collect::<Vec<_>>())
            }).collect::<BTreeMap<String, Vec<String>>>(),
        })
    }

    /// Parse a matrix from the TSV export plus its sidecar.
    pub fn from_tsv(tsv: &str, metadata: &serde_json::Value, file: &str) -> Result<FeatureMatrix> {
        let mut lines = tsv.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(file, 1, "empty matrix file"))?;
        let mut cols = header.split('\t');
        if cols.next() != Some("item_id") {
            return Err(Error::parse(file, 1, "first column must be item_id"));
        }
        let names: Vec<String> = cols.map(str::to_string).collect();
        let mut item_ids = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let id = fields
                .next()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| Error::parse(file, idx + 1, "missing item_id"))?;
            item_ids.push(ItemId(id.to_string()));
            let mut row = 0usize;
            for field in fields {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::parse(file, idx + 1, format!("bad number `{field}`")))?;
                values.push(v);
                row += 1;
            }
            if row != names.len() {
                return Err(Error::parse(
                    file,
                    idx + 1,
                    format!("expected {} values, got {row}", names.len()),
                ));
            }
        }
        let state: MatrixState = serde_json::from_value(metadata["state"].clone())
            .map_err(|e| Error::Config(format!("bad matrix metadata: {e}")))?;
        let column_stats: Option<Vec<ColumnStats>> =
            serde_json::from_value(metadata["column_stats"].clone())
                .map_err(|e| Error::Config(format!("bad matrix metadata: {e}")))?;
        let flags: BTreeMap<String, Vec<String>> = metadata
            .get("flags")
            .map(|v| serde_json::from_value(v.clone()))
            .transpose()
            .map_err(|e| Error::Config(format!("bad matrix metadata: {e}")))?
            .unwrap_or_default();
        Ok(FeatureMatrix {
            item_ids,
            names,
            values,
            state,
            column_stats,
            flags: flags
                .into_iter()
                .map(|(k, v)| (ItemId(k), v.into_iter().collect()))
                .collect(),
        })
    }
}

/// Round-trippable float formatting for the exports.
fn format_float(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        // 17 significant digits round-trip f64 exactly.
        format!("{v:.17e}")
    }
}

/// The default set of occurrence-count features to token-normalize: every
/// feature named `n_*` except the size measures that either are the
/// denominator or count structural units rather than occurrences.
pub fn default_count_features(names: &[String]) -> BTreeSet<String> {
    names
        .iter()
        .filter(|n| n.starts_with("n_"))
        .filter(|n| !matches!(n.as_str(), "n_tokens" | "n_sentences" | "n_characters"))
        .cloned()
        .collect()
}
