//! Lexicon tables driving the norm, sentiment, domain, synset, and hedge
//! features.
//!
//! File formats (UTF-8, `#` comments):
//!
//! - value lexicon: header comments declaring the rating scale, then
//!   `term<TAB>value[<TAB>sd]` rows:
//!
//!   ```text
//!   # scale_min = 1
//!   # scale_max = 9
//!   happy\t8.21\t0.93
//!   ```
//!
//! - category lexicon: `term<TAB>category[,category...]` rows; terms may be
//!   multiword (matched over the token sequence, longest match first).
//!
//! - hedge list: one (possibly multiword) term per line.
//!
//! All lookups are case-folded; value lexicons match single tokens on the
//! lowercased lemma when the lemma layer is present, else the lowercased
//! surface form.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

/// term → rating (and optional inter-rater sd), with a declared scale.
#[derive(Debug, Clone)]
pub struct ValueLexicon {
    pub name: String,
    pub scale_min: f64,
    pub scale_max: f64,
    pub entries: HashMap<String, (f64, Option<f64>)>,
    pub has_sd: bool,
}

impl ValueLexicon {
    pub fn lookup(&self, term: &str) -> Option<(f64, Option<f64>)> {
        self.entries.get(&term.to_lowercase()).copied()
    }
}

/// term → set of category labels.
#[derive(Debug, Clone)]
pub struct CategoryLexicon {
    pub name: String,
    pub entries: HashMap<Vec<String>, BTreeSet<String>>,
    /// Longest entry, in tokens.
    pub max_len: usize,
}

/// Parse a value lexicon; `name` becomes the feature-name suffix.
pub fn parse_value_lexicon(src: &str, file: &str, name: &str) -> Result<ValueLexicon> {
    let mut scale_min: Option<f64> = None;
    let mut scale_max: Option<f64> = None;
    let mut entries = HashMap::new();
    let mut has_sd = false;
    for (idx, raw) in src.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.trim_start().strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "scale_min" => {
                        scale_min = Some(value.parse().map_err(|_| {
                            Error::parse(file, lineno, format!("bad scale_min `{value}`"))
                        })?)
                    }
                    "scale_max" => {
                        scale_max = Some(value.parse().map_err(|_| {
                            Error::parse(file, lineno, format!("bad scale_max `{value}`"))
                        })?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 && cols.len() != 3 {
            return Err(Error::parse(
                file,
                lineno,
                format!("expected `term<TAB>value[<TAB>sd]`, got {} fields", cols.len()),
            ));
        }
        let term = cols[0].trim().to_lowercase();
        if term.is_empty() {
            return Err(Error::parse(file, lineno, "empty term"));
        }
        let value: f64 = cols[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(file, lineno, format!("bad value `{}`", cols[1])))?;
        let sd: Option<f64> = match cols.get(2) {
            Some(s) if !s.trim().is_empty() => Some(s.trim().parse().map_err(|_| {
                Error::parse(file, lineno, format!("bad sd `{s}`"))
            })?),
            _ => None,
        };
        has_sd |= sd.is_some();
        entries.insert(term, (value, sd));
    }
    let (scale_min, scale_max) = match (scale_min, scale_max) {
        (Some(lo), Some(hi)) if lo < hi => (lo, hi),
        (Some(_), Some(_)) => {
            return Err(Error::Config(format!("{file}: scale_min must be below scale_max")))
        }
        _ => {
            return Err(Error::Config(format!(
                "{file}: value lexicon must declare scale_min and scale_max"
            )))
        }
    };
    for (term, (value, _)) in &entries {
        if *value < scale_min || *value > scale_max {
            return Err(Error::Config(format!(
                "{file}: value {value} for `{term}` outside declared scale [{scale_min}, {scale_max}]"
            )));
        }
    }
    Ok(ValueLexicon {
        name: name.to_string(),
        scale_min,
        scale_max,
        entries,
        has_sd,
    })
}

/// Parse a category lexicon; `name` is informational only (category labels
/// name the features).
pub fn parse_category_lexicon(src: &str, file: &str, name: &str) -> Result<CategoryLexicon> {
    let mut entries: HashMap<Vec<String>, BTreeSet<String>> = HashMap::new();
    let mut max_len = 1;
    for (idx, raw) in src.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (term, cats) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(file, lineno, "expected `term<TAB>category[,category...]`"))?;
        let tokens: Vec<String> = term
            .split_whitespace()
            .map(|t| t.to_lowercase())
            .collect();
        if tokens.is_empty() {
            return Err(Error::parse(file, lineno, "empty term"));
        }
        let categories: BTreeSet<String> = cats
            .split(',')
            .map(|c| c.trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        if categories.is_empty() {
            return Err(Error::parse(file, lineno, "term without categories"));
        }
        max_len = max_len.max(tokens.len());
        entries.entry(tokens).or_default().extend(categories);
    }
    Ok(CategoryLexicon {
        name: name.to_string(),
        entries,
        max_len,
    })
}

/// Parse a hedge list (one term per line).
pub fn parse_hedges(src: &str) -> Vec<Vec<String>> {
    src.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|t| t.to_lowercase()).collect())
        .collect()
}
