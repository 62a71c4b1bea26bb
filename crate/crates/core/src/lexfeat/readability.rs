//! Readability indices and syllable counts.
//!
//! The formulas, verbatim (W = word tokens, S = sentences, Syll = syllables,
//! C = alphanumeric characters in word tokens, L = alphabetic characters in
//! word tokens, Poly = words with more than two syllables, Long = words with
//! more than six characters):
//!
//! | feature | formula |
//! |---------|---------|
//! | `flesch_reading_ease` | 206.835 − 1.015·(W/S) − 84.6·(Syll/W) |
//! | `flesch_kincaid_grade` | 0.39·(W/S) + 11.8·(Syll/W) − 15.59 |
//! | `gunning_fog` | 0.4·((W/S) + 100·(Poly/W)) |
//! | `ari` | 4.71·(C/W) + 0.5·(W/S) − 21.43 |
//! | `smog` | 1.0430·√(Poly·30/S) + 3.1291 |
//! | `cli` | 0.0588·(100·L/W) − 0.296·(100·S/W) − 15.8 |
//! | `lix` | W/S + 100·(Long/W) |
//! | `rix` | Long/S |
//!
//! Syllables are counted with a fixed heuristic (see [`syllable_count`]);
//! the heuristic, not a pronunciation dictionary, defines the counts.

use crate::lexfeat::{PartialFeatures, TokenizedItem};

/// Heuristic syllable count of one word.
///
/// Rule, applied to the lowercased alphabetic characters of the token:
/// 1. count maximal runs of vowels (a, e, i, o, u, y);
/// 2. if the word ends in `e`, does not end in `le`, and the run count is
///    greater than one, subtract one (silent e);
/// 3. the minimum is one syllable for any word containing a letter.
pub fn syllable_count(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(|c| c.to_lowercase())
        .collect();
    if letters.is_empty() {
        return 0;
    }
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut runs = 0usize;
    let mut in_run = false;
    for &c in &letters {
        if is_vowel(c) {
            if !in_run {
                runs += 1;
            }
            in_run = true;
        } else {
            in_run = false;
        }
    }
    let n = letters.len();
    let ends_e = letters[n - 1] == 'e';
    let ends_le = n >= 2 && letters[n - 2] == 'l' && ends_e;
    if ends_e && !ends_le && runs > 1 {
        runs -= 1;
    }
    runs.max(1)
}

/// Compute all readability features for one item. With zero word tokens,
/// every feature is emitted as 0 and the item is flagged.
pub fn readability_features(item: &TokenizedItem) -> PartialFeatures {
    let mut out = PartialFeatures::default();
    let words: Vec<&str> = item.word_tokens().map(|t| t.surface.as_str()).collect();
    let w = words.len() as f64;
    let s = item.sentences.len().max(1) as f64;

    const NAMES: [&str; 11] = [
        "flesch_reading_ease",
        "flesch_kincaid_grade",
        "gunning_fog",
        "ari",
        "smog",
        "cli",
        "lix",
        "rix",
        "n_syllables",
        "n_monosyllables",
        "n_polysyllables",
    ];
    if words.is_empty() {
        for name in NAMES {
            out.insert(name, 0.0);
        }
        out.flag("readability_zero_words");
        return out;
    }

    let mut syllables = 0usize;
    let mut mono = 0usize;
    let mut poly = 0usize;
    let mut alnum_chars = 0usize;
    let mut alpha_chars = 0usize;
    let mut long_words = 0usize;
    for word in &words {
        let sy = syllable_count(word);
        syllables += sy;
        if sy == 1 {
            mono += 1;
        }
        if sy > 2 {
            poly += 1;
        }
        alnum_chars += word.chars().filter(|c| c.is_alphanumeric()).count();
        alpha_chars += word.chars().filter(|c| c.is_alphabetic()).count();
        if word.chars().count() > 6 {
            long_words += 1;
        }
    }
    let syll = syllables as f64;
    let poly_f = poly as f64;
    let long_f = long_words as f64;

    out.insert("flesch_reading_ease", 206.835 - 1.015 * (w / s) - 84.6 * (syll / w));
    out.insert("flesch_kincaid_grade", 0.39 * (w / s) + 11.8 * (syll / w) - 15.59);
    out.insert("gunning_fog", 0.4 * ((w / s) + 100.0 * (poly_f / w)));
    out.insert("ari", 4.71 * (alnum_chars as f64 / w) + 0.5 * (w / s) - 21.43);
    out.insert("smog", 1.0430 * (poly_f * 30.0 / s).sqrt() + 3.1291);
    out.insert(
        "cli",
        0.0588 * (100.0 * alpha_chars as f64 / w) - 0.296 * (100.0 * s / w) - 15.8,
    );
    out.insert("lix", w / s + 100.0 * (long_f / w));
    out.insert("rix", long_f / s);
    out.insert("n_syllables", syll);
    out.insert("n_monosyllables", mono as f64);
    out.insert("n_polysyllables", poly_f);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ItemId;
    use crate::lexfeat::tokenize;

    #[test]
    fn syllable_rule_cases() {
        assert_eq!(syllable_count("cat"), 1);
        assert_eq!(syllable_count("beautiful"), 3);
        assert_eq!(syllable_count("make"), 1);
        assert_eq!(syllable_count("little"), 2);
        assert_eq!(syllable_count("the"), 1);
        assert_eq!(syllable_count("happy"), 2);
        assert_eq!(syllable_count("don't"), 1);
    }

    #[test]
    fn single_word_counts() {
        let item = tokenize(ItemId::from("i"), "cat");
        let f = readability_features(&item);
        assert_eq!(f.values["n_syllables"], 1.0);
        assert_eq!(f.values["n_monosyllables"], 1.0);
        assert_eq!(f.values["n_polysyllables"], 0.0);
    }

    #[test]
    fn flesch_from_hand_counts() {
        // 10 words, 1 sentence, 12 syllables under the heuristic
        // (the=1 happy=2 cat=1 and=1 dog=1 run=1 to=1 the=1 big=1 barnyard=2).
        let item = tokenize(ItemId::from("i"), "the happy cat and dog run to the big barnyard");
        let f = readability_features(&item);
        assert_eq!(f.values["n_syllables"], 12.0);
        let expected = 206.835 - 1.015 * 10.0 - 84.6 * 1.2;
        assert!((f.values["flesch_reading_ease"] - expected).abs() < 1e-10);
    }
}
