//! Domain-lexicon counts (hate/abuse/harassment categories).
//!
//! Matching runs over the lowercased match keys of the word-token sequence,
//! longest entry first, without overlaps per lexicon. A matched span of
//! k tokens contributes k to each of its categories; `n_hateful` counts the
//! token positions covered by any lexicon entry, each position once, no
//! matter how many lexicons or categories it belongs to.

use std::collections::BTreeMap;

use crate::lexfeat::{CategoryLexicon, PartialFeatures, TokenizedItem};

pub fn domain_lexicon_features(
    item: &TokenizedItem,
    lexicons: &[CategoryLexicon],
) -> PartialFeatures {
    let mut out = PartialFeatures::default();
    let keys: Vec<String> = item.word_tokens().map(|t| item.match_key(t)).collect();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    // Pre-seed all category names so absent categories emit zero.
    for lexicon in lexicons {
        for cats in lexicon.entries.values() {
            for c in cats {
                counts.entry(c).or_insert(0);
            }
        }
    }
    let mut covered = vec![false; keys.len()];
    for lexicon in lexicons {
        let mut i = 0;
        while i < keys.len() {
            let mut matched = None;
            let max_len = lexicon.max_len.min(keys.len() - i);
            for len in (1..=max_len).rev() {
                if let Some(cats) = lexicon.entries.get(&keys[i..i + len]) {
                    matched = Some((len, cats));
                    break;
                }
            }
            match matched {
                Some((len, cats)) => {
                    for c in cats {
                        *counts.get_mut(c.as_str()).expect("pre-seeded") += len;
                    }
                    for flag in &mut covered[i..i + len] {
                        *flag = true;
                    }
                    i += len;
                }
                None => i += 1,
            }
        }
    }
    for (category, count) in counts {
        out.insert(format!("n_{category}"), count as f64);
    }
    out.insert("n_hateful", covered.iter().filter(|&&c| c).count() as f64);
    out
}
