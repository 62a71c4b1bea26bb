//! Pure dataset operations: conflict resolution, missing/PNA removal,
//! recoding, participation filtering, summaries, and the split/batch
//! scenario constructors.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::parse::{answer_arity, canonical_value};
use crate::corpus::{AnnotatorId, Dataset, ItemId, RecodeAction, RecodeMap};
use crate::error::{Error, Result};

/// Headline counts plus the annotators-per-item distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_items: usize,
    pub n_annotations: usize,
    pub n_annotators: usize,
    pub annotators_per_item_mean: f64,
    /// Population standard deviation; 0 when undefined (no items).
    pub annotators_per_item_sd: f64,
}

impl Dataset {
    fn retain_annotators(&self, keep: &BTreeSet<AnnotatorId>) -> Dataset {
        let profiles = self
            .profiles
            .iter()
            .filter(|p| keep.contains(&p.annotator_id))
            .cloned()
            .collect();
        let annotations = self
            .annotations
            .iter()
            .filter(|a| keep.contains(&a.annotator_id))
            .cloned()
            .collect();
        Dataset {
            items: self.items.clone(),
            profiles,
            annotations,
            schema: self.schema.clone(),
        }
    }

    /// Remove every annotator id whose repeated profile rows disagree on any
    /// characteristic; identical repeated rows are collapsed to one.
    pub fn drop_conflicting_annotators(&self) -> Dataset {
        let mut first: BTreeMap<&AnnotatorId, &BTreeMap<String, String>> = BTreeMap::new();
        let mut conflicting: BTreeSet<AnnotatorId> = BTreeSet::new();
        for p in &self.profiles {
            match first.get(&p.annotator_id) {
                None => {
                    first.insert(&p.annotator_id, &p.characteristics);
                }
                Some(prev) => {
                    if **prev != p.characteristics {
                        conflicting.insert(p.annotator_id.clone());
                    }
                }
            }
        }
        let mut seen: BTreeSet<AnnotatorId> = BTreeSet::new();
        let profiles = self
            .profiles
            .iter()
            .filter(|p| !conflicting.contains(&p.annotator_id) && seen.insert(p.annotator_id.clone()))
            .cloned()
            .collect();
        let annotations = self
            .annotations
            .iter()
            .filter(|a| !conflicting.contains(&a.annotator_id))
            .cloned()
            .collect();
        Dataset {
            items: self.items.clone(),
            profiles,
            annotations,
            schema: self.schema.clone(),
        }
    }

    /// Remove annotators with any missing or "prefer not to answer"
    /// characteristic, along with their annotations.
    ///
    /// A value is missing when the schema declares the characteristic but the
    /// profile has no value or a whitespace-only value; PNA tokens are
    /// matched case-insensitively.
    pub fn drop_missing_and_pna(&self, pna_tokens: &[String]) -> Dataset {
        let pna: Vec<String> = pna_tokens.iter().map(|t| t.to_lowercase()).collect();
        let keep: BTreeSet<AnnotatorId> = self
            .profiles
            .iter()
            .filter(|p| {
                self.schema.names().all(|name| match p.characteristics.get(name) {
                    None => false,
                    Some(v) => {
                        let v = v.trim();
                        !v.is_empty() && !pna.contains(&v.to_lowercase())
                    }
                })
            })
            .map(|p| p.annotator_id.clone())
            .collect();
        self.retain_annotators(&keep)
    }

    /// Rewrite characteristic values per the supplied maps.
    ///
    /// Annotation labels and item texts are never touched. Annotators hit by
    /// a `DROP` rule are removed with their annotations.
    pub fn recode(&self, maps: &[RecodeMap]) -> Result<Dataset> {
        for m in maps {
            if self.schema.characteristic(&m.characteristic).is_none() {
                return Err(Error::Config(format!(
                    "recode map references unknown characteristic `{}`",
                    m.characteristic
                )));
            }
        }
        let delim = self.schema.multi_delimiter;
        let mut dropped: BTreeSet<AnnotatorId> = BTreeSet::new();
        let mut profiles = Vec::with_capacity(self.profiles.len());
        for p in &self.profiles {
            let mut chars = p.characteristics.clone();
            let mut drop = false;
            for m in maps {
                let Some(value) = chars.get(&m.characteristic) else {
                    continue;
                };
                let key = canonical_value(value, delim);
                match m.entries.get(&key) {
                    Some(RecodeAction::Map(to)) => {
                        chars.insert(m.characteristic.clone(), to.clone());
                    }
                    Some(RecodeAction::Drop) => {
                        drop = true;
                    }
                    None => {
                        if answer_arity(value, delim) > 1 {
                            if let Some(label) = &m.multi_catch_all {
                                chars.insert(m.characteristic.clone(), label.clone());
                                continue;
                            }
                        }
                        if m.exhaustive {
                            return Err(Error::Validation(format!(
                                "characteristic `{}`: raw value `{}` has no recode entry \
                                 (annotator {})",
                                m.characteristic, value, p.annotator_id
                            )));
                        }
                    }
                }
            }
            if drop {
                dropped.insert(p.annotator_id.clone());
            } else {
                profiles.push(crate::corpus::AnnotatorProfile {
                    annotator_id: p.annotator_id.clone(),
                    characteristics: chars,
                });
            }
        }
        let annotations = self
            .annotations
            .iter()
            .filter(|a| !dropped.contains(&a.annotator_id))
            .cloned()
            .collect();
        Ok(Dataset {
            items: self.items.clone(),
            profiles,
            annotations,
            schema: self.schema.clone(),
        })
    }

    /// Remove annotators giving more than one answer for `characteristic`
    /// (multi-valued answers split on the schema's delimiter).
    pub fn drop_multi_membership(&self, characteristic: &str) -> Dataset {
        let delim = self.schema.multi_delimiter;
        let keep: BTreeSet<AnnotatorId> = self
            .profiles
            .iter()
            .filter(|p| match p.characteristics.get(characteristic) {
                Some(v) => answer_arity(v, delim) <= 1,
                None => true,
            })
            .map(|p| p.annotator_id.clone())
            .collect();
        self.retain_annotators(&keep)
    }

    /// Two-stage participation filter, single pass: first remove annotators
    /// with fewer than `min_items_per_annotator` annotations, then remove
    /// items left with fewer than `min_annotators_per_item` annotators.
    /// No fixed-point iteration.
    pub fn filter_by_participation(
        &self,
        min_items_per_annotator: usize,
        min_annotators_per_item: usize,
    ) -> Dataset {
        assert!(min_items_per_annotator >= 1 && min_annotators_per_item >= 1);
        let mut per_annotator: BTreeMap<&AnnotatorId, usize> = BTreeMap::new();
        for a in &self.annotations {
            *per_annotator.entry(&a.annotator_id).or_insert(0) += 1;
        }
        let keep_annotators: BTreeSet<AnnotatorId> = per_annotator
            .iter()
            .filter(|(_, &n)| n >= min_items_per_annotator)
            .map(|(id, _)| (*id).clone())
            .collect();

        let mut per_item: BTreeMap<&ItemId, usize> = BTreeMap::new();
        for a in &self.annotations {
            if keep_annotators.contains(&a.annotator_id) {
                *per_item.entry(&a.item_id).or_insert(0) += 1;
            }
        }
        let keep_items: BTreeSet<ItemId> = per_item
            .iter()
            .filter(|(_, &n)| n >= min_annotators_per_item)
            .map(|(id, _)| (*id).clone())
            .collect();

        let items = self
            .items
            .iter()
            .filter(|i| keep_items.contains(&i.item_id))
            .cloned()
            .collect();
        let profiles = self
            .profiles
            .iter()
            .filter(|p| keep_annotators.contains(&p.annotator_id))
            .cloned()
            .collect();
        let annotations = self
            .annotations
            .iter()
            .filter(|a| keep_annotators.contains(&a.annotator_id) && keep_items.contains(&a.item_id))
            .cloned()
            .collect();
        Dataset {
            items,
            profiles,
            annotations,
            schema: self.schema.clone(),
        }
    }

    /// Item/annotation/annotator counts and the annotators-per-item
    /// mean ± population sd.
    pub fn summarize(&self) -> DatasetSummary {
        let mut per_item: BTreeMap<&ItemId, BTreeSet<&AnnotatorId>> = BTreeMap::new();
        for a in &self.annotations {
            per_item.entry(&a.item_id).or_default().insert(&a.annotator_id);
        }
        let counts: Vec<f64> = self
            .items
            .iter()
            .map(|i| per_item.get(&i.item_id).map(|s| s.len()).unwrap_or(0) as f64)
            .collect();
        DatasetSummary {
            n_items: self.items.len(),
            n_annotations: self.annotations.len(),
            n_annotators: self.profiles.len(),
            annotators_per_item_mean: crate::math::mean(&counts),
            annotators_per_item_sd: crate::math::sd_population(&counts),
        }
    }

    /// Partition annotators at random into two halves, deterministic under
    /// the seed. The first half receives floor(n · fraction) annotators.
    /// Both halves keep the full item set.
    pub fn split_annotators(&self, fraction: f64, seed: u64) -> (Dataset, Dataset) {
        assert!(fraction > 0.0 && fraction < 1.0, "fraction must be in (0, 1)");
        let mut ids: Vec<AnnotatorId> = self.annotator_ids().into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ids.shuffle(&mut rng);
        let first_size = (ids.len() as f64 * fraction).floor() as usize;
        let first: BTreeSet<AnnotatorId> = ids[..first_size].iter().cloned().collect();
        let second: BTreeSet<AnnotatorId> = ids[first_size..].iter().cloned().collect();
        (self.retain_annotators(&first), self.retain_annotators(&second))
    }

    /// Group items by their annotator-id-set signature, pack each group into
    /// chunks of at most `subset_size` items, and draw `n_subsets` chunks at
    /// random (deterministic under the seed).
    ///
    /// Returns the drawn subsets plus human-readable warnings (fewer
    /// candidates than requested, or undersized subsets).
    pub fn batch_subsets(
        &self,
        subset_size: usize,
        n_subsets: usize,
        seed: u64,
    ) -> (Vec<Dataset>, Vec<String>) {
        assert!(subset_size >= 1, "subset_size must be at least 1");
        let mut by_signature: BTreeMap<Vec<AnnotatorId>, Vec<ItemId>> = BTreeMap::new();
        let mut per_item: BTreeMap<&ItemId, BTreeSet<AnnotatorId>> = BTreeMap::new();
        for a in &self.annotations {
            per_item.entry(&a.item_id).or_default().insert(a.annotator_id.clone());
        }
        for item in &self.items {
            if let Some(set) = per_item.get(&item.item_id) {
                let signature: Vec<AnnotatorId> = set.iter().cloned().collect();
                by_signature.entry(signature).or_default().push(item.item_id.clone());
            }
        }

        let mut candidates: Vec<(Vec<AnnotatorId>, Vec<ItemId>)> = Vec::new();
        for (signature, mut items) in by_signature {
            items.sort();
            for chunk in items.chunks(subset_size) {
                candidates.push((signature.clone(), chunk.to_vec()));
            }
        }

        let mut warnings = Vec::new();
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let take = n_subsets.min(candidates.len());
        if take < n_subsets {
            warnings.push(format!(
                "insufficient items: only {take} subsets of size <= {subset_size} available \
                 ({n_subsets} requested)"
            ));
        }
        let mut chosen: Vec<usize> = order.into_iter().take(take).collect();
        chosen.sort_unstable();

        let mut out = Vec::with_capacity(take);
        for idx in chosen {
            let (signature, item_ids) = &candidates[idx];
            if item_ids.len() < subset_size {
                warnings.push(format!(
                    "subset with annotator set of {} has only {} items (< {subset_size})",
                    signature.len(),
                    item_ids.len()
                ));
            }
            let item_set: BTreeSet<&ItemId> = item_ids.iter().collect();
            let annotator_set: BTreeSet<&AnnotatorId> = signature.iter().collect();
            let items = self
                .items
                .iter()
                .filter(|i| item_set.contains(&i.item_id))
                .cloned()
                .collect();
            let mut seen: BTreeSet<&AnnotatorId> = BTreeSet::new();
            let profiles = self
                .profiles
                .iter()
                .filter(|p| annotator_set.contains(&p.annotator_id) && seen.insert(&p.annotator_id))
                .cloned()
                .collect();
            let annotations = self
                .annotations
                .iter()
                .filter(|a| item_set.contains(&a.item_id))
                .cloned()
                .collect();
            out.push(Dataset {
                items,
                profiles,
                annotations,
                schema: self.schema.clone(),
            });
        }
        (out, warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_dataset, parse_schema};

    const SCHEMA: &str = "\
scale = 5
pna = NA | Prefer not to answer
multi_delimiter = ;
[gender]
type = nominal
levels = male | female | diverse
reference = male
[religion]
type = nominal
levels = a | b | c
reference = a
";

    fn toy() -> Dataset {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let items = "item_id,text\ni1,one text\ni2,two text\ni3,three text\ni4,four text\ni5,five text\n";
        let profiles = "\
annotator_id,gender,religion
a1,male,a
a2,female,b
a3,female,a
a4,male,c
";
        let annotations = "\
item_id,annotator_id,label
i1,a1,1
i1,a2,2
i1,a3,3
i2,a1,1
i2,a2,2
i2,a3,3
i3,a1,5
i3,a2,4
i3,a4,3
i4,a1,1
i4,a4,2
i5,a2,5
i5,a3,4
";
        load_dataset(annotations, profiles, items, &schema).unwrap()
    }

    #[test]
    fn load_minimal_and_reject_dangling() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let items = "item_id,text\ni1,hello\n";
        let profiles = "annotator_id,gender,religion\na1,male,a\n";
        let ok = load_dataset("item_id,annotator_id,label\ni1,a1,3\n", profiles, items, &schema);
        assert_eq!(ok.unwrap().annotations.len(), 1);

        let err = load_dataset("item_id,annotator_id,label\ni1,a9,3\n", profiles, items, &schema)
            .unwrap_err();
        assert!(err.to_string().contains("unknown annotator a9"), "{err}");
    }

    #[test]
    fn reject_duplicate_pair() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let items = "item_id,text\ni1,hello\n";
        let profiles = "annotator_id,gender,religion\na1,male,a\n";
        let err = load_dataset(
            "item_id,annotator_id,label\ni1,a1,3\ni1,a1,4\n",
            profiles,
            items,
            &schema,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate annotation pair"), "{err}");
    }

    #[test]
    fn conflicting_profiles_removed_duplicates_collapsed() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let items = "item_id,text\ni1,hello\n";
        let profiles = "\
annotator_id,gender,religion
a1,male,a
a1,female,a
a2,female,b
a2,female,b
";
        let ds = load_dataset(
            "item_id,annotator_id,label\ni1,a1,3\ni1,a2,4\n",
            profiles,
            items,
            &schema,
        )
        .unwrap();
        let ds = ds.drop_conflicting_annotators();
        assert_eq!(ds.profiles.len(), 1);
        assert_eq!(ds.profiles[0].annotator_id.0, "a2");
        assert_eq!(ds.annotations.len(), 1);
        ds.check_integrity().unwrap();
    }

    #[test]
    fn pna_and_missing_removed() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let items = "item_id,text\ni1,hello\n";
        let profiles = "\
annotator_id,gender,religion
a1,Prefer not to answer,a
a2,female,b
a3,,c
";
        let ds = load_dataset(
            "item_id,annotator_id,label\ni1,a1,3\ni1,a2,4\ni1,a3,5\n",
            profiles,
            items,
            &schema,
        )
        .unwrap();
        let out = ds.drop_missing_and_pna(&schema.pna_tokens);
        assert_eq!(out.profiles.len(), 1);
        assert_eq!(out.annotations.len(), 1);
        // identity when nothing is missing
        let again = out.drop_missing_and_pna(&schema.pna_tokens);
        assert_eq!(again, out);
    }

    #[test]
    fn all_pna_gives_empty_annotations() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let items = "item_id,text\ni1,hello\n";
        let profiles = "annotator_id,gender,religion\na1,NA,a\n";
        let ds = load_dataset("item_id,annotator_id,label\ni1,a1,3\n", profiles, items, &schema)
            .unwrap();
        let out = ds.drop_missing_and_pna(&schema.pna_tokens);
        assert!(out.annotations.is_empty());
        assert!(out.profiles.is_empty());
    }

    #[test]
    fn participation_filter_two_stage() {
        // a4 has 2 annotations (< 3): removed in stage 1. i3's annotators
        // {a1, a2, a4} then drop to 2 (< 3): removed in stage 2, as are
        // i4 and i5. No re-iteration over annotators afterwards.
        let ds = toy();
        let out = ds.filter_by_participation(3, 3);
        let items: Vec<&str> = out.items.iter().map(|i| i.item_id.0.as_str()).collect();
        assert_eq!(items, vec!["i1", "i2"]);
        assert!(out.profiles.iter().all(|p| p.annotator_id.0 != "a4"));
        // every retained annotator had >= 3 annotations before stage 2
        assert_eq!(out.profiles.len(), 3);
        out.check_integrity().unwrap();

        // vacuous thresholds are the identity
        let same = ds.filter_by_participation(1, 1);
        assert_eq!(same, ds);
    }

    #[test]
    fn filter_defaults_identity_when_satisfied() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let mut items = String::from("item_id,text\n");
        let mut profiles = String::from("annotator_id,gender,religion\n");
        let mut anns = String::from("item_id,annotator_id,label\n");
        for a in 0..3 {
            profiles.push_str(&format!("a{a},male,a\n"));
        }
        for i in 0..10 {
            items.push_str(&format!("i{i},text {i}\n"));
            for a in 0..3 {
                anns.push_str(&format!("i{i},a{a},1\n"));
            }
        }
        let ds = load_dataset(&anns, &profiles, &items, &schema).unwrap();
        let out = ds.filter_by_participation(10, 3);
        assert_eq!(out, ds);
    }

    #[test]
    fn recode_multi_catch_all_and_drop() {
        let schema = parse_schema(
            "scale = 5\nmulti_delimiter = ;\n[race]\ntype = nominal\nlevels = w | a | multiracial\nreference = w\n",
            "schema",
        )
        .unwrap();
        let items = "item_id,text\ni1,hello\n";
        let profiles = "\
annotator_id,race
a1,White;Asian;Black
a2,Asian ; White
a3,White
";
        let maps = crate::corpus::parse_recode_maps(
            "characteristic,raw,harmonized\nrace,*multi*,multiracial\nrace,White;Asian,wa\nrace,White,w\n",
            "recode",
            ';',
        )
        .unwrap();
        let ds = load_dataset(
            "item_id,annotator_id,label\ni1,a1,1\ni1,a2,2\ni1,a3,3\n",
            profiles,
            items,
            &schema,
        )
        .unwrap();
        let out = ds.recode(&maps).unwrap();
        let get = |id: &str| {
            out.profiles
                .iter()
                .find(|p| p.annotator_id.0 == id)
                .unwrap()
                .characteristics["race"]
                .clone()
        };
        assert_eq!(get("a1"), "multiracial");
        assert_eq!(get("a2"), "wa"); // canonicalized to the explicit pair entry
        assert_eq!(get("a3"), "w");
        // labels untouched
        assert_eq!(out.annotations, ds.annotations);
    }

    #[test]
    fn recode_exhaustive_errors_on_unmapped() {
        let schema = parse_schema(
            "scale = 5\n[education]\ntype = ordinal\nlevels = low | high\n",
            "schema",
        )
        .unwrap();
        let items = "item_id,text\ni1,hello\n";
        let profiles = "annotator_id,education\na1,weird\n";
        let maps = crate::corpus::parse_recode_maps(
            "characteristic,raw,harmonized\neducation,BA,high\neducation,*unmapped*,error\n",
            "recode",
            ';',
        )
        .unwrap();
        let ds = load_dataset("item_id,annotator_id,label\ni1,a1,1\n", profiles, items, &schema)
            .unwrap();
        let err = ds.recode(&maps).unwrap_err();
        assert!(err.to_string().contains("weird"), "{err}");
    }

    #[test]
    fn recode_empty_maps_identity() {
        let ds = toy();
        assert_eq!(ds.recode(&[]).unwrap(), ds);
    }

    #[test]
    fn multi_membership_dropped() {
        let schema = parse_schema(
            "scale = 5\nmulti_delimiter = ;\n[sexuality]\ntype = nominal\nlevels = s | b\nreference = s\n",
            "schema",
        )
        .unwrap();
        let items = "item_id,text\ni1,hello\n";
        let profiles = "annotator_id,sexuality\na1,bisexual;straight\na2,straight\n";
        let ds = load_dataset(
            "item_id,annotator_id,label\ni1,a1,1\ni1,a2,2\n",
            profiles,
            items,
            &schema,
        )
        .unwrap();
        let out = ds.drop_multi_membership("sexuality");
        assert_eq!(out.profiles.len(), 1);
        assert_eq!(out.profiles[0].annotator_id.0, "a2");
        let identity = out.drop_multi_membership("sexuality");
        assert_eq!(identity, out);
    }

    #[test]
    fn summary_uniform_design() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let mut items = String::from("item_id,text\n");
        let mut profiles = String::from("annotator_id,gender,religion\n");
        let mut anns = String::from("item_id,annotator_id,label\n");
        for a in 0..3 {
            profiles.push_str(&format!("a{a},male,a\n"));
        }
        for i in 0..4 {
            items.push_str(&format!("i{i},text {i}\n"));
            for a in 0..3 {
                anns.push_str(&format!("i{i},a{a},2\n"));
            }
        }
        let ds = load_dataset(&anns, &profiles, &items, &schema).unwrap();
        let s = ds.summarize();
        assert_eq!(
            (s.n_items, s.n_annotations, s.n_annotators),
            (4, 12, 3)
        );
        assert!((s.annotators_per_item_mean - 3.0).abs() < 1e-12);
        assert!(s.annotators_per_item_sd.abs() < 1e-12);
    }

    #[test]
    fn summary_empty() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let ds = Dataset::assemble(vec![], vec![], vec![], schema).unwrap();
        let s = ds.summarize();
        assert_eq!((s.n_items, s.n_annotations, s.n_annotators), (0, 0, 0));
        assert_eq!(s.annotators_per_item_sd, 0.0);
    }

    #[test]
    fn split_deterministic_and_partitioning() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let mut items = String::from("item_id,text\n");
        let mut profiles = String::from("annotator_id,gender,religion\n");
        let mut anns = String::from("item_id,annotator_id,label\n");
        items.push_str("i0,some text\n");
        for a in 0..100 {
            profiles.push_str(&format!("a{a:03},male,a\n"));
            anns.push_str(&format!("i0,a{a:03},1\n"));
        }
        let ds = load_dataset(&anns, &profiles, &items, &schema).unwrap();
        let (h1, h2) = ds.split_annotators(0.5, 7);
        assert_eq!(h1.profiles.len(), 50);
        assert_eq!(h2.profiles.len(), 50);
        let union: BTreeSet<_> = h1.annotator_ids().union(&h2.annotator_ids()).cloned().collect();
        assert_eq!(union, ds.annotator_ids());
        assert!(h1.annotator_ids().is_disjoint(&h2.annotator_ids()));
        // items survive in both halves
        assert_eq!(h1.items.len(), 1);
        assert_eq!(h2.items.len(), 1);

        let (r1, r2) = ds.split_annotators(0.5, 7);
        assert_eq!((r1, r2), (h1, h2));
    }

    #[test]
    fn split_rounding_floor() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let items = "item_id,text\ni1,hello\n";
        let profiles = "annotator_id,gender,religion\na1,male,a\na2,male,a\na3,male,a\n";
        let anns = "item_id,annotator_id,label\ni1,a1,1\ni1,a2,2\ni1,a3,3\n";
        let ds = load_dataset(anns, profiles, items, &schema).unwrap();
        let (h1, h2) = ds.split_annotators(0.5, 0);
        assert_eq!(h1.profiles.len(), 1); // floor(3 * 0.5)
        assert_eq!(h2.profiles.len(), 2);
    }

    #[test]
    fn batch_subsets_exact_packing() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let mut items = String::from("item_id,text\n");
        let mut profiles = String::from("annotator_id,gender,religion\n");
        let mut anns = String::from("item_id,annotator_id,label\n");
        for a in 0..6 {
            profiles.push_str(&format!("a{a},male,a\n"));
        }
        // two signatures of 4 items each: items 0..4 -> {a0,a1,a2}, 4..8 -> {a3,a4,a5}
        for i in 0..8 {
            items.push_str(&format!("i{i},text {i}\n"));
            let base = if i < 4 { 0 } else { 3 };
            for a in base..base + 3 {
                anns.push_str(&format!("i{i},a{a},1\n"));
            }
        }
        let ds = load_dataset(&anns, &profiles, &items, &schema).unwrap();
        let (subsets, warnings) = ds.batch_subsets(4, 2, 11);
        assert_eq!(subsets.len(), 2);
        assert!(warnings.is_empty());
        for s in &subsets {
            assert_eq!(s.items.len(), 4);
            assert_eq!(s.profiles.len(), 3);
            s.check_integrity().unwrap();
        }
    }

    #[test]
    fn batch_subsets_degenerate_with_warning() {
        let schema = parse_schema(SCHEMA, "schema").unwrap();
        let items = "item_id,text\ni1,hello\ni2,world\n";
        let profiles = "annotator_id,gender,religion\na1,male,a\n";
        let anns = "item_id,annotator_id,label\ni1,a1,1\ni2,a1,2\n";
        let ds = load_dataset(anns, profiles, items, &schema).unwrap();
        let (subsets, warnings) = ds.batch_subsets(300, 1, 3);
        assert_eq!(subsets.len(), 1);
        assert_eq!(subsets[0].items.len(), 2);
        assert!(!warnings.is_empty());
    }

    #[test]
    fn operations_preserve_integrity() {
        let ds = toy();
        ds.drop_conflicting_annotators().check_integrity().unwrap();
        ds.drop_missing_and_pna(&ds.schema.pna_tokens).check_integrity().unwrap();
        ds.filter_by_participation(2, 2).check_integrity().unwrap();
        let (a, b) = ds.split_annotators(0.5, 1);
        a.check_integrity().unwrap();
        b.check_integrity().unwrap();
    }
}
