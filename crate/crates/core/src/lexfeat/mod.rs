//! Item-level linguistic and lexicon feature extraction.
//!
//! Each extractor is a pure function from a [`TokenizedItem`] (plus immutable
//! lexicon tables) to a named partial feature vector; extraction is
//! embarrassingly parallel over items. [`extract_features`] assembles the
//! per-item vectors into a [`FeatureMatrix`], which is then token-normalized
//! and standardized before modeling.
//!
//! Counting convention: `n_tokens` and every "per token" denominator count
//! *word* tokens (punctuation excluded). This choice is configurable at the
//! normalization step via the count-feature set.

mod conllu;
mod domain;
mod info;
mod lexicon;
mod matrix;
mod norms;
mod readability;
mod richness;
mod surface;
mod tags;
mod tokenize;

pub use conllu::ingest_conllu;
pub use domain::domain_lexicon_features;
pub use info::{info_features, lz77_compressed_len, COMPRESSOR_VERSION};
pub use lexicon::{
    parse_category_lexicon, parse_hedges, parse_value_lexicon, CategoryLexicon, ValueLexicon,
};
pub use matrix::{default_count_features, ColumnStats, FeatureMatrix, MatrixState};
pub use norms::{emotion_sentiment_features, norm_features};
pub use readability::{readability_features, syllable_count};
pub use richness::richness_features;
pub use surface::surface_features;
pub use tags::{hedge_count_features, tag_features};
pub use tokenize::tokenize;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::corpus::ItemId;
use crate::error::{Error, Result};

/// One token with its optional annotation layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lemma: Option<String>,
    pub upos: Option<String>,
    /// Universal-features attribute/value pairs, e.g. ("Number", "Sing").
    pub morph: Vec<(String, String)>,
    /// Dependency head: 0 is the sentence root, otherwise the 1-based index
    /// of the head token within the sentence.
    pub head: Option<usize>,
    pub deprel: Option<String>,
    /// Named-entity label, optionally `B-`/`I-` prefixed.
    pub entity: Option<String>,
    pub is_punct: bool,
}

/// Which annotation layers an item carries (fully present or fully absent).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LayerFlags {
    pub lemma: bool,
    pub pos: bool,
    pub morph: bool,
    pub dep: bool,
    pub entity: bool,
}

/// A tokenized item: sentences of tokens plus layer availability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedItem {
    pub item_id: ItemId,
    pub text: String,
    pub sentences: Vec<Vec<Token>>,
    pub layers: LayerFlags,
}

impl TokenizedItem {
    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flatten()
    }

    pub fn word_tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens().filter(|t| !t.is_punct)
    }

    pub fn n_word_tokens(&self) -> usize {
        self.word_tokens().count()
    }

    /// Lowercased matching key of a token: lemma when the layer is present,
    /// surface form otherwise.
    pub fn match_key(&self, token: &Token) -> String {
        if self.layers.lemma {
            token.lemma.as_deref().unwrap_or(&token.surface).to_lowercase()
        } else {
            token.surface.to_lowercase()
        }
    }
}

/// A named partial feature vector plus quality flags raised during
/// extraction (degenerate denominators, unmatched lexicons, ...).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialFeatures {
    pub values: BTreeMap<String, f64>,
    pub flags: BTreeSet<String>,
}

impl PartialFeatures {
    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    pub fn flag(&mut self, name: impl Into<String>) {
        self.flags.insert(name.into());
    }

    pub fn merge(&mut self, other: PartialFeatures) {
        self.values.extend(other.values);
        self.flags.extend(other.flags);
    }
}

/// Which built-in feature suites to run. Lexicon-driven suites (norms,
/// sentiment, domain, synsets, hedges) are controlled by supplying or
/// omitting the lexicons themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSelection {
    pub surface: bool,
    pub readability: bool,
    pub richness: bool,
    pub info: bool,
    /// POS/morph/dependency/entity features (layer-dependent).
    pub tags: bool,
}

impl Default for SuiteSelection {
    fn default() -> Self {
        SuiteSelection {
            surface: true,
            readability: true,
            richness: true,
            info: true,
            tags: true,
        }
    }
}

impl SuiteSelection {
    /// Parse a suite allow-list; the empty list means everything.
    pub fn from_names(names: &[String]) -> Result<SuiteSelection> {
        if names.is_empty() {
            return Ok(SuiteSelection::default());
        }
        let mut sel = SuiteSelection {
            surface: false,
            readability: false,
            richness: false,
            info: false,
            tags: false,
        };
        for name in names {
            match name.as_str() {
                "surface" => sel.surface = true,
                "readability" => sel.readability = true,
                "richness" => sel.richness = true,
                "info" => sel.info = true,
                "tags" => sel.tags = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown feature suite `{other}` (surface|readability|richness|info|tags)"
                    )))
                }
            }
        }
        Ok(sel)
    }
}

/// The lexicon tables used by a feature run.
#[derive(Debug, Clone, Default)]
pub struct LexiconSet {
    /// Psycholinguistic norm lexicons (concreteness, valence, ...).
    pub values: Vec<ValueLexicon>,
    /// Per-emotion intensity lexicons.
    pub emotions: Vec<ValueLexicon>,
    /// Sentiment category lexicon (categories `positive` / `negative`).
    pub sentiment: Option<CategoryLexicon>,
    /// Domain lexicons (hate/abuse categories).
    pub domains: Vec<CategoryLexicon>,
    /// Synset-size lexicons; a `_noun`/`_verb`/`_adj` name suffix restricts
    /// matching to that POS.
    pub synsets: Vec<ValueLexicon>,
    /// Hedge terms (possibly multiword).
    pub hedges: Vec<Vec<String>>,
}

/// Extract every applicable feature suite for each item and assemble the
/// raw feature matrix.
///
/// Suites that depend on annotation layers (POS, morphology, dependencies,
/// lemmas) must be available for all items or none: a mixed corpus is an
/// error. Within a suite, features observed for some items but not others
/// (e.g. sparse morph combinations) default to zero.
pub fn extract_features(items: &[TokenizedItem], lexicons: &LexiconSet) -> Result<FeatureMatrix> {
    extract_features_with(items, lexicons, SuiteSelection::default())
}

/// [`extract_features`] restricted to the given suites.
pub fn extract_features_with(
    items: &[TokenizedItem],
    lexicons: &LexiconSet,
    suites: SuiteSelection,
) -> Result<FeatureMatrix> {
    if items.is_empty() {
        return Err(Error::Validation("no items to extract features from".into()));
    }
    for item in items {
        if item.n_word_tokens() == 0 {
            return Err(Error::Validation(format!(
                "item {} has no word tokens",
                item.item_id
            )));
        }
    }
    for (layer, flag) in [
        ("lemma", (|l: &LayerFlags| l.lemma) as fn(&LayerFlags) -> bool),
        ("pos", |l: &LayerFlags| l.pos),
        ("dep", |l: &LayerFlags| l.dep),
    ] {
        let n = items.iter().filter(|i| flag(&i.layers)).count();
        if n != 0 && n != items.len() {
            return Err(Error::Validation(format!(
                "layer `{layer}` present for {n} of {} items; layers must be uniform",
                items.len()
            )));
        }
    }

    let per_item: Vec<PartialFeatures> = items
        .par_iter()
        .map(|item| {
            let mut features = PartialFeatures::default();
            if suites.surface {
                features.merge(surface_features(item));
            }
            if suites.readability {
                features.merge(readability_features(item));
            }
            if suites.richness {
                features.merge(richness_features(item));
            }
            if suites.info {
                features.merge(info_features(item));
            }
            features.merge(norm_features(item, &lexicons.values));
            if lexicons.sentiment.is_some() || !lexicons.emotions.is_empty() {
                features.merge(emotion_sentiment_features(
                    item,
                    lexicons.sentiment.as_ref(),
                    &lexicons.emotions,
                ));
            }
            if !lexicons.domains.is_empty() {
                features.merge(domain_lexicon_features(item, &lexicons.domains));
            }
            if suites.tags {
                features.merge(tag_features(item, &lexicons.synsets, &lexicons.hedges));
            } else if !lexicons.hedges.is_empty() {
                // Hedge counting needs no annotation layers.
                features.merge(tags::hedge_count_features(item, &lexicons.hedges));
            }
            features
        })
        .collect();

    // Union of feature names; missing entries are sparse zero counts.
    let mut names: BTreeSet<String> = BTreeSet::new();
    for f in &per_item {
        names.extend(f.values.keys().cloned());
    }
    let names: Vec<String> = names.into_iter().collect();
    let mut values = Vec::with_capacity(items.len() * names.len());
    for f in &per_item {
        for name in &names {
            values.push(f.values.get(name).copied().unwrap_or(0.0));
        }
    }
    let flags = items
        .iter()
        .zip(&per_item)
        .filter(|(_, f)| !f.flags.is_empty())
        .map(|(item, f)| (item.item_id.clone(), f.flags.clone()))
        .collect();
    Ok(FeatureMatrix::new_raw(
        items.iter().map(|i| i.item_id.clone()).collect(),
        names,
        values,
        flags,
    ))
}
