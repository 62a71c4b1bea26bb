//! Fixed-effect design construction: characteristic encodings, linguistic
//! main effects, pairwise annotator-characteristic interactions, cross-level
//! interactions, and the random-effect group indices.
//!
//! Column naming follows the reporting convention of the summaries:
//! nominal characteristics contribute `<name><level>` treatment columns,
//! ordinal ones contribute orthonormal polynomial contrast columns
//! `<name>.L`, `<name>.Q`, `<name>.C`, `<name>^4`, ...; interval
//! characteristics pass through under their own name, unstandardized.
//! Interaction columns are `<a>:<b>` with the annotator column first for
//! cross-level terms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    AnnotationRecord, AnnotatorId, AnnotatorProfile, CharacteristicType, ItemId, Schema,
};
use crate::error::{Error, Result};
use crate::lexfeat::FeatureMatrix;

/// Origin of a design column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnOrigin {
    /// Model intercept (handled by the sampler, never a matrix column).
    Intercept,
    /// Linguistic feature main effect.
    #[serde(rename = "L")]
    Linguistic,
    /// Annotator characteristic main effect.
    #[serde(rename = "S")]
    Annotator,
    /// Interaction of two annotator characteristics.
    #[serde(rename = "S:S")]
    AnnotatorPair,
    /// Interaction of a linguistic feature with an annotator characteristic.
    #[serde(rename = "L:S")]
    Cross,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignColumn {
    pub name: String,
    pub origin: ColumnOrigin,
    /// Parent column names for interactions, empty for main effects.
    pub parents: Vec<String>,
}

/// Encoding recipe of one characteristic, kept for prediction grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastSpec {
    pub characteristic: String,
    pub coding: ContrastCoding,
    /// Level names (empty for interval characteristics).
    pub levels: Vec<String>,
    /// Produced column names.
    pub columns: Vec<String>,
    /// levels × columns contrast values (one 0/1 row per level for
    /// treatment coding; empty for interval).
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastCoding {
    Treatment,
    OrthogonalPolynomial,
    Passthrough,
}

/// Row-per-annotation design: fixed-effect columns, outcome, and the two
/// random-effect index vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub columns: Vec<DesignColumn>,
    /// Row-major annotations × columns.
    pub values: Vec<f64>,
    /// Raw ordinal labels as reals (1..=K), unstandardized.
    pub outcome: Vec<f64>,
    /// Contiguous 0-based annotator group per row.
    pub annotator_index: Vec<usize>,
    /// Contiguous 0-based item group per row.
    pub item_index: Vec<usize>,
    /// Group id -> annotator id (sorted lexicographically).
    pub annotator_levels: Vec<AnnotatorId>,
    /// Group id -> item id (sorted lexicographically).
    pub item_levels: Vec<ItemId>,
    /// Encoding recipe per characteristic.
    pub contrasts: BTreeMap<String, ContrastSpec>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.outcome.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.columns.len() + col]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }
}

/// One 0/1 column per non-reference level, in level order.
pub fn encode_nominal(
    values: &[String],
    levels: &[String],
    reference: &str,
) -> Result<Vec<Vec<f64>>> {
    if !levels.iter().any(|l| l == reference) {
        return Err(Error::Config(format!("reference `{reference}` not among levels")));
    }
    let non_ref: Vec<&String> = levels.iter().filter(|l| l.as_str() != reference).collect();
    let mut columns = vec![Vec::with_capacity(values.len()); non_ref.len()];
    for v in values {
        if !levels.iter().any(|l| l == v) {
            return Err(Error::Validation(format!("unseen nominal value `{v}`")));
        }
        for (c, level) in non_ref.iter().enumerate() {
            columns[c].push(if v == *level { 1.0 } else { 0.0 });
        }
    }
    Ok(columns)
}

/// Orthonormal polynomial contrast matrix for k equally spaced levels:
/// Gram–Schmidt over the powers of the centered ranks, unit-norm columns.
/// Returns a k × (k−1) matrix (row = level, column = polynomial degree).
pub fn polynomial_contrasts(k: usize) -> Vec<Vec<f64>> {
    assert!(k >= 2);
    let ranks: Vec<f64> = (1..=k).map(|i| i as f64).collect();
    let mean = crate::math::mean(&ranks);
    // Basis vectors: x^0 .. x^(k-1) over centered ranks.
    let mut basis: Vec<Vec<f64>> = (0..k)
        .map(|degree| ranks.iter().map(|&r| (r - mean).powi(degree as i32)).collect())
        .collect();
    // Modified Gram–Schmidt with unit normalization.
    for i in 0..k {
        for j in 0..i {
            let dot: f64 = basis[i].iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
            let bj = basis[j].clone();
            for (a, b) in basis[i].iter_mut().zip(&bj) {
                *a -= dot * b;
            }
        }
        let norm: f64 = basis[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in basis[i].iter_mut() {
            *v /= norm;
        }
    }
    // Drop the constant column; transpose to level-major rows.
    (0..k)
        .map(|level| (1..k).map(|degree| basis[degree][level]).collect())
        .collect()
}

/// Contrast column suffixes in the R convention: .L, .Q, .C, ^4, ^5, ...
fn polynomial_suffixes(k: usize) -> Vec<String> {
    (1..k)
        .map(|d| match d {
            1 => ".L".to_string(),
            2 => ".Q".to_string(),
            3 => ".C".to_string(),
            d => format!("^{d}"),
        })
        .collect()
}

/// Encode ordinal values with orthonormal polynomial contrasts.
/// Returns (suffixes, columns).
pub fn encode_ordinal(
    values: &[String],
    ordered_levels: &[String],
) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let k = ordered_levels.len();
    if k < 2 {
        return Err(Error::Config("ordinal encoding requires at least 2 levels".into()));
    }
    let contrasts = polynomial_contrasts(k);
    let mut columns = vec![Vec::with_capacity(values.len()); k - 1];
    for v in values {
        let level = ordered_levels
            .iter()
            .position(|l| l == v)
            .ok_or_else(|| Error::Validation(format!("unseen ordinal level `{v}`")))?;
        for (c, col) in columns.iter_mut().enumerate() {
            col.push(contrasts[level][c]);
        }
    }
    Ok((polynomial_suffixes(k), columns))
}

/// Encoded columns of one characteristic over a slice of profile values.
struct EncodedCharacteristic {
    names: Vec<String>,
    /// column-major: per produced column, one value per profile.
    columns: Vec<Vec<f64>>,
    spec: ContrastSpec,
}

fn encode_characteristic(
    name: &str,
    ty: &CharacteristicType,
    values: &[String],
) -> Result<EncodedCharacteristic> {
    match ty {
        CharacteristicType::Nominal { levels, reference } => {
            let columns = encode_nominal(values, levels, reference)?;
            let non_ref: Vec<&String> = levels.iter().filter(|l| l.as_str() != reference).collect();
            let names: Vec<String> = non_ref.iter().map(|l| format!("{name}{l}")).collect();
            let matrix: Vec<Vec<f64>> = levels
                .iter()
                .map(|level| {
                    non_ref
                        .iter()
                        .map(|nr| if level == *nr { 1.0 } else { 0.0 })
                        .collect()
                })
                .collect();
            Ok(EncodedCharacteristic {
                names: names.clone(),
                columns,
                spec: ContrastSpec {
                    characteristic: name.to_string(),
                    coding: ContrastCoding::Treatment,
                    levels: levels.clone(),
                    columns: names,
                    matrix,
                },
            })
        }
        CharacteristicType::Ordinal { levels } => {
            let (suffixes, columns) = encode_ordinal(values, levels)?;
            let names: Vec<String> = suffixes.iter().map(|s| format!("{name}{s}")).collect();
            Ok(EncodedCharacteristic {
                names: names.clone(),
                columns,
                spec: ContrastSpec {
                    characteristic: name.to_string(),
                    coding: ContrastCoding::OrthogonalPolynomial,
                    levels: levels.clone(),
                    columns: names,
                    matrix: polynomial_contrasts(levels.len()),
                },
            })
        }
        CharacteristicType::Interval => {
            let mut column = Vec::with_capacity(values.len());
            for v in values {
                let x: f64 = v.trim().parse().map_err(|_| {
                    Error::Validation(format!("interval characteristic `{name}`: bad value `{v}`"))
                })?;
                column.push(x);
            }
            Ok(EncodedCharacteristic {
                names: vec![name.to_string()],
                columns: vec![column],
                spec: ContrastSpec {
                    characteristic: name.to_string(),
                    coding: ContrastCoding::Passthrough,
                    levels: Vec::new(),
                    columns: vec![name.to_string()],
                    matrix: Vec::new(),
                },
            })
        }
    }
}

/// Build the full design: linguistic mains, annotator mains, all distinct
/// pairwise annotator-characteristic interactions, and all linguistic ×
/// annotator interactions, plus the outcome and group index vectors.
///
/// The feature matrix must be standardized and hold exactly the selected
/// features; all annotators and items referenced by `annotations` must be
/// present in `profiles` and the feature matrix.
pub fn build_design(
    features: &FeatureMatrix,
    profiles: &[AnnotatorProfile],
    schema: &Schema,
    annotations: &[AnnotationRecord],
) -> Result<DesignMatrix> {
    if annotations.is_empty() {
        return Err(Error::Validation("cannot build a design for zero annotations".into()));
    }
    // Group levels sorted so the construction is row-order invariant.
    let mut annotator_levels: Vec<AnnotatorId> = annotations
        .iter()
        .map(|a| a.annotator_id.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    annotator_levels.sort();
    let mut item_levels: Vec<ItemId> = annotations
        .iter()
        .map(|a| a.item_id.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    item_levels.sort();

    let annotator_pos: BTreeMap<&AnnotatorId, usize> =
        annotator_levels.iter().enumerate().map(|(i, a)| (a, i)).collect();
    let item_pos: BTreeMap<&ItemId, usize> =
        item_levels.iter().enumerate().map(|(i, a)| (a, i)).collect();

    let mut profile_by_id: BTreeMap<&AnnotatorId, &AnnotatorProfile> = BTreeMap::new();
    for p in profiles {
        profile_by_id.entry(&p.annotator_id).or_insert(p);
    }
    for a in &annotator_levels {
        if !profile_by_id.contains_key(a) {
            return Err(Error::Validation(format!("annotator {a} missing from profiles")));
        }
    }
    let mut feature_row: BTreeMap<&ItemId, usize> = BTreeMap::new();
    for (r, id) in features.item_ids.iter().enumerate() {
        feature_row.insert(id, r);
    }
    for i in &item_levels {
        if !feature_row.contains_key(i) {
            return Err(Error::Validation(format!("item {i} missing from the feature matrix")));
        }
    }

    // Encode every characteristic over the annotator levels.
    let mut encoded: Vec<EncodedCharacteristic> = Vec::new();
    let mut contrasts = BTreeMap::new();
    for (name, ty) in &schema.characteristics {
        let values: Vec<String> = annotator_levels
            .iter()
            .map(|id| {
                profile_by_id[id]
                    .characteristics
                    .get(name)
                    .cloned()
                    .ok_or_else(|| {
                        Error::Validation(format!("annotator {id} lacks characteristic `{name}`"))
                    })
            })
            .collect::<Result<_>>()?;
        let enc = encode_characteristic(name, ty, &values)?;
        contrasts.insert(name.clone(), enc.spec.clone());
        encoded.push(enc);
    }

    // Per-annotator S row (concatenated encodings) and per-item L row.
    let s_names: Vec<String> = encoded.iter().flat_map(|e| e.names.clone()).collect();
    let s_width = s_names.len();
    let mut s_rows: Vec<Vec<f64>> = vec![Vec::with_capacity(s_width); annotator_levels.len()];
    for enc in &encoded {
        for col in &enc.columns {
            for (row, v) in s_rows.iter_mut().zip(col) {
                row.push(*v);
            }
        }
    }
    // Offsets of each characteristic's columns within the S row.
    let mut char_offsets: Vec<(usize, usize)> = Vec::new();
    let mut offset = 0;
    for enc in &encoded {
        char_offsets.push((offset, enc.names.len()));
        offset += enc.names.len();
    }

    let l_names = features.names.clone();
    let l_width = l_names.len();

    // Column plan: L, S, S:S (distinct characteristic pairs), L:S.
    let mut columns: Vec<DesignColumn> = Vec::new();
    for name in &l_names {
        columns.push(DesignColumn {
            name: name.clone(),
            origin: ColumnOrigin::Linguistic,
            parents: Vec::new(),
        });
    }
    for name in &s_names {
        columns.push(DesignColumn {
            name: name.clone(),
            origin: ColumnOrigin::Annotator,
            parents: Vec::new(),
        });
    }
    let mut ss_pairs: Vec<(usize, usize)> = Vec::new();
    for ci in 0..char_offsets.len() {
        for cj in (ci + 1)..char_offsets.len() {
            let (oi, wi) = char_offsets[ci];
            let (oj, wj) = char_offsets[cj];
            for a in oi..oi + wi {
                for b in oj..oj + wj {
                    ss_pairs.push((a, b));
                    columns.push(DesignColumn {
                        name: format!("{}:{}", s_names[a], s_names[b]),
                        origin: ColumnOrigin::AnnotatorPair,
                        parents: vec![s_names[a].clone(), s_names[b].clone()],
                    });
                }
            }
        }
    }
    for s_name in &s_names {
        for l_name in &l_names {
            columns.push(DesignColumn {
                name: format!("{s_name}:{l_name}"),
                origin: ColumnOrigin::Cross,
                parents: vec![s_name.clone(), l_name.clone()],
            });
        }
    }

    let width = columns.len();
    let mut values = Vec::with_capacity(annotations.len() * width);
    let mut outcome = Vec::with_capacity(annotations.len());
    let mut annotator_index = Vec::with_capacity(annotations.len());
    let mut item_index = Vec::with_capacity(annotations.len());
    for ann in annotations {
        let ai = annotator_pos[&ann.annotator_id];
        let ii = item_pos[&ann.item_id];
        let s_row = &s_rows[ai];
        let l_row = features.row(feature_row[&ann.item_id]);
        values.extend_from_slice(l_row);
        values.extend_from_slice(s_row);
        for &(a, b) in &ss_pairs {
            values.push(s_row[a] * s_row[b]);
        }
        for sv in s_row.iter().take(s_width) {
            for lv in l_row.iter().take(l_width) {
                values.push(sv * lv);
            }
        }
        outcome.push(ann.label as f64);
        annotator_index.push(ai);
        item_index.push(ii);
        debug_assert_eq!(values.len() % width, 0);
    }

    Ok(DesignMatrix {
        columns,
        values,
        outcome,
        annotator_index,
        item_index,
        annotator_levels,
        item_levels,
        contrasts,
    })
}

/// Number of fixed-effect columns excluding the intercept.
pub fn count_effects(design: &DesignMatrix) -> usize {
    design.columns.len()
}

/// The closed-form column count: |L| + Σ c_S + Σ_{S<S'} c_S·c_S' + |L|·Σ c_S,
/// where c_S is the encoded width of characteristic S.
pub fn effect_count_formula(n_features: usize, widths: &[usize]) -> usize {
    let s_total: usize = widths.iter().sum();
    let pairwise: usize = widths
        .iter()
        .enumerate()
        .map(|(i, &wi)| widths[i + 1..].iter().map(|&wj| wi * wj).sum::<usize>())
        .sum();
    n_features + s_total + pairwise + n_features * s_total
}

/// Encoded width of one characteristic.
pub fn encoded_width(ty: &CharacteristicType) -> usize {
    match ty {
        CharacteristicType::Nominal { levels, .. } => levels.len() - 1,
        CharacteristicType::Ordinal { levels } => levels.len() - 1,
        CharacteristicType::Interval => 1,
    }
}

/// Remove constant columns (sparse demographics can produce all-zero
/// encodings). Returns the pruned design and the dropped column names for
/// the manifest.
pub fn drop_constant_columns(design: &DesignMatrix) -> (DesignMatrix, Vec<String>) {
    let width = design.columns.len();
    let n = design.n_rows();
    let mut keep: Vec<usize> = Vec::new();
    let mut dropped: Vec<String> = Vec::new();
    for c in 0..width {
        let first = design.get(0, c);
        if (0..n).any(|r| design.get(r, c) != first) {
            keep.push(c);
        } else {
            dropped.push(design.columns[c].name.clone());
        }
    }
    let mut values = Vec::with_capacity(n * keep.len());
    for r in 0..n {
        for &c in &keep {
            values.push(design.get(r, c));
        }
    }
    (
        DesignMatrix {
            columns: keep.iter().map(|&c| design.columns[c].clone()).collect(),
            values,
            outcome: design.outcome.clone(),
            annotator_index: design.annotator_index.clone(),
            item_index: design.item_index.clone(),
            annotator_levels: design.annotator_levels.clone(),
            item_levels: design.item_levels.clone(),
            contrasts: design.contrasts.clone(),
        },
        dropped,
    )
}

impl DesignMatrix {
    /// Delimited matrix export for the inference stage: header
    /// `outcome<TAB>annotator<TAB>item<TAB><columns...>`, one row per
    /// annotation, floats in round-trippable notation.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("outcome\tannotator\titem");
        for c in &self.columns {
            out.push('\t');
            out.push_str(&c.name);
        }
        out.push('\n');
        for r in 0..self.n_rows() {
            out.push_str(&format!(
                "{:.17e}\t{}\t{}",
                self.outcome[r], self.annotator_index[r], self.item_index[r]
            ));
            for c in 0..self.columns.len() {
                out.push('\t');
                out.push_str(&format!("{:.17e}", self.get(r, c)));
            }
            out.push('\n');
        }
        out
    }

    /// Design manifest: every column with origin and parents, the group
    /// level maps, and the contrast recipes.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "columns": self.columns,
            "annotator_levels": self.annotator_levels,
            "item_levels": self.item_levels,
            "contrasts": self.contrasts,
        })
    }

    /// Rebuild a design from the TSV export and its manifest.
    pub fn from_tsv(tsv: &str, metadata: &serde_json::Value, file: &str) -> Result<DesignMatrix> {
        let columns: Vec<DesignColumn> = serde_json::from_value(metadata["columns"].clone())
            .map_err(|e| Error::Config(format!("bad design metadata: {e}")))?;
        let annotator_levels: Vec<AnnotatorId> =
            serde_json::from_value(metadata["annotator_levels"].clone())
                .map_err(|e| Error::Config(format!("bad design metadata: {e}")))?;
        let item_levels: Vec<ItemId> = serde_json::from_value(metadata["item_levels"].clone())
            .map_err(|e| Error::Config(format!("bad design metadata: {e}")))?;
        let contrasts: BTreeMap<String, ContrastSpec> =
            serde_json::from_value(metadata["contrasts"].clone())
                .map_err(|e| Error::Config(format!("bad design metadata: {e}")))?;
        let mut lines = tsv.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(file, 1, "empty design file"))?;
        let head: Vec<&str> = header.split('\t').collect();
        if head.len() != 3 + columns.len() || head[..3] != ["outcome", "annotator", "item"] {
            return Err(Error::parse(file, 1, "design header does not match the manifest"));
        }
        for (h, c) in head[3..].iter().zip(&columns) {
            if *h != c.name {
                return Err(Error::parse(file, 1, format!("column `{h}` does not match manifest `{}`", c.name)));
            }
        }
        let mut outcome = Vec::new();
        let mut annotator_index = Vec::new();
        let mut item_index = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 + columns.len() {
                return Err(Error::parse(
                    file,
                    idx + 1,
                    format!("expected {} fields, got {}", 3 + columns.len(), fields.len()),
                ));
            }
            outcome.push(
                fields[0]
                    .parse::<f64>()
                    .map_err(|_| Error::parse(file, idx + 1, "bad outcome"))?,
            );
            let a: usize = fields[1]
                .parse()
                .map_err(|_| Error::parse(file, idx + 1, "bad annotator index"))?;
            let i: usize = fields[2]
                .parse()
                .map_err(|_| Error::parse(file, idx + 1, "bad item index"))?;
            if a >= annotator_levels.len() {
                return Err(Error::parse(file, idx + 1, format!("annotator index {a} out of range")));
            }
            if i >= item_levels.len() {
                return Err(Error::parse(file, idx + 1, format!("item index {i} out of range")));
            }
            annotator_index.push(a);
            item_index.push(i);
            for f in &fields[3..] {
                values.push(
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(file, idx + 1, format!("bad value `{f}`")))?,
                );
            }
        }
        Ok(DesignMatrix {
            columns,
            values,
            outcome,
            annotator_index,
            item_index,
            annotator_levels,
            item_levels,
            contrasts,
        })
    }
}
