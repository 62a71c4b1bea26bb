//! Psycholinguistic-norm and emotion/sentiment features driven by value
//! lexicons.
//!
//! For a lexicon `L` with scale [min, max], matched over word tokens:
//!
//! - `avg_L`: mean rating of matched tokens (scale midpoint and an item flag
//!   when nothing matches);
//! - `n_high_L`: tokens with rating strictly above min + 2(max−min)/3;
//! - `n_low_L`: tokens with rating strictly below min + (max−min)/3;
//! - `avg_std_L`, `n_high_std_L` (lexicons carrying an sd column): mean sd of
//!   matched tokens, and tokens whose sd exceeds (max−min)/3, i.e. ratings
//!   spanning more than one third of the scale.
//!
//! Tokens are matched on the lowercased lemma when the lemma layer is
//! present, else the lowercased surface form; unmatched tokens are ignored.

use crate::lexfeat::{CategoryLexicon, PartialFeatures, TokenizedItem, ValueLexicon};

fn value_lexicon_features(
    out: &mut PartialFeatures,
    item: &TokenizedItem,
    lexicon: &ValueLexicon,
) {
    let lo_bound = lexicon.scale_min + (lexicon.scale_max - lexicon.scale_min) / 3.0;
    let hi_bound = lexicon.scale_min + 2.0 * (lexicon.scale_max - lexicon.scale_min) / 3.0;
    let sd_bound = (lexicon.scale_max - lexicon.scale_min) / 3.0;

    let mut matched = 0usize;
    let mut sum = 0.0;
    let mut n_high = 0usize;
    let mut n_low = 0usize;
    let mut sd_sum = 0.0;
    let mut sd_matched = 0usize;
    let mut n_high_sd = 0usize;
    for token in item.word_tokens() {
        let Some((value, sd)) = lexicon.lookup(&item.match_key(token)) else {
            continue;
        };
        matched += 1;
        sum += value;
        if value > hi_bound {
            n_high += 1;
        }
        if value < lo_bound {
            n_low += 1;
        }
        if let Some(sd) = sd {
            sd_matched += 1;
            sd_sum += sd;
            if sd > sd_bound {
                n_high_sd += 1;
            }
        }
    }
    let name = &lexicon.name;
    if matched == 0 {
        out.insert(format!("avg_{name}"), (lexicon.scale_min + lexicon.scale_max) / 2.0);
        out.flag(format!("norm_no_match:{name}"));
    } else {
        out.insert(format!("avg_{name}"), sum / matched as f64);
    }
    out.insert(format!("n_high_{name}"), n_high as f64);
    out.insert(format!("n_low_{name}"), n_low as f64);
    if lexicon.has_sd {
        let avg_sd = if sd_matched == 0 { 0.0 } else { sd_sum / sd_matched as f64 };
        out.insert(format!("avg_std_{name}"), avg_sd);
        out.insert(format!("n_high_std_{name}"), n_high_sd as f64);
    }
}

/// Rating-based features for each norm lexicon.
pub fn norm_features(item: &TokenizedItem, lexicons: &[ValueLexicon]) -> PartialFeatures {
    let mut out = PartialFeatures::default();
    for lexicon in lexicons {
        value_lexicon_features(&mut out, item, lexicon);
    }
    out
}

/// Emotion-intensity features (same construction as the norms) plus the
/// sentiment counts: `n_positive_sentiment`, `n_negative_sentiment`, and
/// `sentiment_score` = (n_pos − n_neg) / word tokens.
pub fn emotion_sentiment_features(
    item: &TokenizedItem,
    sentiment: Option<&CategoryLexicon>,
    emotions: &[ValueLexicon],
) -> PartialFeatures {
    let mut out = PartialFeatures::default();
    for lexicon in emotions {
        value_lexicon_features(&mut out, item, lexicon);
    }
    if let Some(sentiment) = sentiment {
        let mut n_pos = 0usize;
        let mut n_neg = 0usize;
        let mut n_tokens = 0usize;
        for token in item.word_tokens() {
            n_tokens += 1;
            let key = vec![item.match_key(token)];
            if let Some(cats) = sentiment.entries.get(&key) {
                if cats.contains("positive") {
                    n_pos += 1;
                }
                if cats.contains("negative") {
                    n_neg += 1;
                }
            }
        }
        out.insert("n_positive_sentiment", n_pos as f64);
        out.insert("n_negative_sentiment", n_neg as f64);
        let score = if n_tokens == 0 {
            0.0
        } else {
            (n_pos as f64 - n_neg as f64) / n_tokens as f64
        };
        out.insert("sentiment_score", score);
    }
    out
}
