//! Surface-level size and length features.

use crate::lexfeat::{PartialFeatures, TokenizedItem};

/// Sequence lengths, token/type/sentence counts, and word-length statistics.
///
/// `raw_sequence_length` counts all characters of the item text including
/// whitespace; `n_characters` excludes whitespace. `n_types` counts distinct
/// lowercased word-token surface forms; `n_lemmas` (lemma layer only) counts
/// distinct lowercased lemmas. Long words have more than six characters.
pub fn surface_features(item: &TokenizedItem) -> PartialFeatures {
    let mut out = PartialFeatures::default();
    let n_sentences = item.sentences.len();
    let words: Vec<&str> = item.word_tokens().map(|t| t.surface.as_str()).collect();
    let n_tokens = words.len();

    let raw_len = item.text.chars().count();
    let n_characters = item.text.chars().filter(|c| !c.is_whitespace()).count();
    let mut types = std::collections::BTreeSet::new();
    let mut total_word_chars = 0usize;
    let mut n_long = 0usize;
    for w in &words {
        types.insert(w.to_lowercase());
        let len = w.chars().count();
        total_word_chars += len;
        if len > 6 {
            n_long += 1;
        }
    }

    out.insert("raw_sequence_length", raw_len as f64);
    out.insert("n_characters", n_characters as f64);
    out.insert("n_tokens", n_tokens as f64);
    out.insert("n_sentences", n_sentences as f64);
    out.insert("n_types", types.len() as f64);
    out.insert("n_long_words", n_long as f64);
    out.insert(
        "tokens_per_sentence",
        if n_sentences > 0 { n_tokens as f64 / n_sentences as f64 } else { 0.0 },
    );
    out.insert(
        "characters_per_sentence",
        if n_sentences > 0 { n_characters as f64 / n_sentences as f64 } else { 0.0 },
    );
    out.insert(
        "avg_word_length",
        if n_tokens > 0 { total_word_chars as f64 / n_tokens as f64 } else { 0.0 },
    );
    if item.layers.lemma {
        let lemmas: std::collections::BTreeSet<String> = item
            .word_tokens()
            .filter_map(|t| t.lemma.as_deref())
            .map(str::to_lowercase)
            .collect();
        out.insert("n_lemmas", lemmas.len() as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ItemId;
    use crate::lexfeat::tokenize;

    fn get(text: &str, name: &str) -> f64 {
        let item = tokenize(ItemId::from("i"), text);
        surface_features(&item).values[name]
    }

    #[test]
    fn the_cat_sat() {
        let item = tokenize(ItemId::from("i"), "The cat sat.");
        let f = surface_features(&item);
        assert_eq!(f.values["n_tokens"], 3.0);
        assert_eq!(f.values["n_types"], 3.0);
        assert_eq!(f.values["n_sentences"], 1.0);
        assert_eq!(f.values["n_long_words"], 0.0);
        assert_eq!(f.values["raw_sequence_length"], 12.0);
        assert_eq!(f.values["n_characters"], 10.0);
    }

    #[test]
    fn repeated_type() {
        assert_eq!(get("aa aa aa", "n_types"), 1.0);
        assert_eq!(get("aa aa aa", "avg_word_length"), 2.0);
    }

    #[test]
    fn long_words() {
        assert_eq!(get("wonderful elephants", "n_long_words"), 2.0);
    }
}
