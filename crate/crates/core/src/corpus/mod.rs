//! Ingest, validate, filter, harmonize, and split disaggregated annotation
//! datasets.
//!
//! A [`Dataset`] couples three tables: items (texts), annotator profiles
//! (typed characteristics), and annotations (ordinal labels on a 1..=K
//! scale). The structure is partially cross-classified: each annotation
//! belongs to exactly one (item, annotator) pair, and only some pairs exist.
//!
//! All operations are pure: they borrow the input and return a new value,
//! so they are safe to call from concurrent tasks. Randomized operations
//! ([`Dataset::split_annotators`], [`Dataset::batch_subsets`]) are
//! deterministic under a seed.

mod ops;
mod parse;

pub use ops::DatasetSummary;
pub use parse::{
    parse_annotations, parse_items, parse_profiles, parse_recode_maps, parse_schema,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque item identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub String);

/// Opaque annotator identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnnotatorId(pub String);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for AnnotatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        ItemId(s.to_string())
    }
}

impl From<&str> for AnnotatorId {
    fn from(s: &str) -> Self {
        AnnotatorId(s.to_string())
    }
}

/// One ordinal label given by one annotator to one item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub item_id: ItemId,
    pub annotator_id: AnnotatorId,
    /// Label on the dataset's ordinal scale, 1..=K.
    pub label: u32,
}

/// An annotator and their characteristic values, keyed by characteristic name.
///
/// Values are kept as raw strings until design-matrix encoding; harmonization
/// happens through [`RecodeMap`]s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorProfile {
    pub annotator_id: AnnotatorId,
    pub characteristics: BTreeMap<String, String>,
}

/// A text item, optionally pointing at a pre-annotation layer file
/// (tokens/tags/dependencies/entities) keyed by the same item id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub item_id: ItemId,
    pub text: String,
}

/// Measurement type of one annotator characteristic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CharacteristicType {
    /// Unordered categories; `reference` is the omitted level under
    /// treatment coding.
    Nominal {
        levels: Vec<String>,
        reference: String,
    },
    /// Ordered categories in the declared order; encoded with orthonormal
    /// polynomial contrasts.
    Ordinal { levels: Vec<String> },
    /// Real-valued; passed through unstandardized.
    Interval,
}

/// Declared typing for the annotator characteristics of a dataset, plus the
/// ordinal scale size and the tokens treated as "prefer not to answer".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    /// Number of points on the ordinal annotation scale (labels are 1..=K).
    pub scale: u32,
    /// Characteristics in declaration order.
    pub characteristics: Vec<(String, CharacteristicType)>,
    /// Sentinel strings marking a non-answer; matched case-insensitively.
    pub pna_tokens: Vec<String>,
    /// Delimiter separating parts of a multi-valued answer (";" or ",").
    pub multi_delimiter: char,
}

impl Schema {
    pub fn characteristic(&self, name: &str) -> Option<&CharacteristicType> {
        self.characteristics
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.characteristics.iter().map(|(n, _)| n.as_str())
    }
}

/// Action a recode rule applies to a raw value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecodeAction {
    Map(String),
    /// Remove the annotator entirely.
    Drop,
}

/// Value-rewriting rules for one characteristic.
///
/// Multi-valued raws are canonicalized (split on the delimiter, trimmed,
/// sorted) before lookup, so "White;Asian" and "Asian; White" match the same
/// entry. Multi-valued answers without an explicit entry fall to
/// `multi_catch_all` when set. With `exhaustive`, any single-valued raw
/// without an entry is an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecodeMap {
    pub characteristic: String,
    pub entries: BTreeMap<String, RecodeAction>,
    pub multi_catch_all: Option<String>,
    pub exhaustive: bool,
}

/// A validated disaggregated annotation dataset.
///
/// `profiles` may contain repeated annotator ids until
/// [`Dataset::drop_conflicting_annotators`] has been applied; every other
/// invariant (label bounds, referential integrity, unique annotation pairs)
/// holds from construction on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub items: Vec<ItemRecord>,
    pub profiles: Vec<AnnotatorProfile>,
    pub annotations: Vec<AnnotationRecord>,
    pub schema: Schema,
}

/// Load a dataset from the three standard files, validating referential
/// integrity and rejecting duplicate (item, annotator) pairs.
pub fn load_dataset(
    annotation_src: &str,
    profile_src: &str,
    item_src: &str,
    schema: &Schema,
) -> Result<Dataset> {
    let items = parse_items(item_src, "items")?;
    let profiles = parse_profiles(profile_src, "profiles", schema)?;
    let annotations = parse_annotations(annotation_src, "annotations", schema.scale)?;
    Dataset::assemble(items, profiles, annotations, schema.clone())
}

impl Dataset {
    /// Build a dataset from parsed parts, enforcing the construction
    /// invariants.
    pub fn assemble(
        items: Vec<ItemRecord>,
        profiles: Vec<AnnotatorProfile>,
        annotations: Vec<AnnotationRecord>,
        schema: Schema,
    ) -> Result<Self> {
        let mut item_ids = BTreeSet::new();
        for it in &items {
            if !item_ids.insert(&it.item_id) {
                return Err(Error::Validation(format!("duplicate item id {}", it.item_id)));
            }
        }
        let annotator_ids: BTreeSet<&AnnotatorId> =
            profiles.iter().map(|p| &p.annotator_id).collect();

        let mut seen_pairs = BTreeSet::new();
        for a in &annotations {
            if a.label < 1 || a.label > schema.scale {
                return Err(Error::Validation(format!(
                    "label {} for ({}, {}) outside scale 1..={}",
                    a.label, a.item_id, a.annotator_id, schema.scale
                )));
            }
            if !item_ids.contains(&a.item_id) {
                return Err(Error::Validation(format!(
                    "annotation references unknown item {}",
                    a.item_id
                )));
            }
            if !annotator_ids.contains(&a.annotator_id) {
                return Err(Error::Validation(format!(
                    "annotation references unknown annotator {}",
                    a.annotator_id
                )));
            }
            if !seen_pairs.insert((&a.item_id, &a.annotator_id)) {
                return Err(Error::Validation(format!(
                    "duplicate annotation pair ({}, {})",
                    a.item_id, a.annotator_id
                )));
            }
        }
        Ok(Dataset {
            items,
            profiles,
            annotations,
            schema,
        })
    }

    /// Full-scan referential-integrity check; cheap enough to run in tests
    /// after every operation.
    pub fn check_integrity(&self) -> Result<()> {
        let item_ids: BTreeSet<&ItemId> = self.items.iter().map(|i| &i.item_id).collect();
        let annotator_ids: BTreeSet<&AnnotatorId> =
            self.profiles.iter().map(|p| &p.annotator_id).collect();
        let mut pairs = BTreeSet::new();
        for a in &self.annotations {
            if !item_ids.contains(&a.item_id) {
                return Err(Error::Validation(format!("dangling item {}", a.item_id)));
            }
            if !annotator_ids.contains(&a.annotator_id) {
                return Err(Error::Validation(format!(
                    "dangling annotator {}",
                    a.annotator_id
                )));
            }
            if a.label < 1 || a.label > self.schema.scale {
                return Err(Error::Validation(format!("label {} out of bounds", a.label)));
            }
            if !pairs.insert((&a.item_id, &a.annotator_id)) {
                return Err(Error::Validation(format!(
                    "duplicate pair ({}, {})",
                    a.item_id, a.annotator_id
                )));
            }
        }
        Ok(())
    }

    pub fn annotator_ids(&self) -> BTreeSet<AnnotatorId> {
        self.profiles.iter().map(|p| p.annotator_id.clone()).collect()
    }

    /// Re-serialize the annotations table in the standard format.
    pub fn annotations_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["item_id", "annotator_id", "label"]).expect("in-memory write");
        for a in &self.annotations {
            w.write_record([&a.item_id.0, &a.annotator_id.0, &a.label.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf-8")
    }

    /// Re-serialize the profiles table (characteristics in schema order).
    pub fn profiles_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["annotator_id".to_string()];
        header.extend(self.schema.names().map(str::to_string));
        w.write_record(&header).expect("in-memory write");
        for p in &self.profiles {
            let mut row = vec![p.annotator_id.0.clone()];
            for name in self.schema.names() {
                row.push(p.characteristics.get(name).cloned().unwrap_or_default());
            }
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf-8")
    }

    /// Re-serialize the items table with standard quoting.
    pub fn items_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["item_id", "text"]).expect("in-memory write");
        for i in &self.items {
            w.write_record([&i.item_id.0, &i.text]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf-8")
    }
}
