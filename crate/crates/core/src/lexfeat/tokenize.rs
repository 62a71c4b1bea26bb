//! Plain-text tokenization.
//!
//! Segmentation rules (fixed, versioned with the crate):
//!
//! | rule | behavior |
//! |------|----------|
//! | sentence boundary | after a run of `.`, `!`, `?` followed by whitespace or end of text, and at every newline |
//! | token boundary | Unicode word boundaries (UAX #29) |
//! | word vs punctuation | a token containing at least one alphanumeric character is a word; everything else is punctuation |
//! | contractions | interior apostrophes stay inside the word: `don't` is one word token |
//! | whitespace | never a token |
//!
//! Tokens produced here carry no lemma/POS/dependency/entity layers; use
//! [`crate::lexfeat::ingest_conllu`] when those are needed.

use unicode_segmentation::UnicodeSegmentation;

use crate::corpus::ItemId;
use crate::lexfeat::{LayerFlags, Token, TokenizedItem};

/// Split `text` into sentences of tokens.
pub fn tokenize(item_id: ItemId, text: &str) -> TokenizedItem {
    let mut sentences = Vec::new();
    for chunk in split_sentences(text) {
        let tokens: Vec<Token> = chunk
            .split_word_bounds()
            .filter(|seg| !seg.trim().is_empty())
            .map(|seg| {
                let is_word = seg.chars().any(char::is_alphanumeric);
                Token {
                    surface: seg.to_string(),
                    lemma: None,
                    upos: None,
                    morph: Vec::new(),
                    head: None,
                    deprel: None,
                    entity: None,
                    is_punct: !is_word,
                }
            })
            .collect();
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    TokenizedItem {
        item_id,
        text: text.to_string(),
        sentences,
        layers: LayerFlags::default(),
    }
}

fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut in_terminal = false;
    for (idx, ch) in text.char_indices() {
        if ch == '\n' {
            out.push(&text[start..idx]);
            start = idx + ch.len_utf8();
            in_terminal = false;
            continue;
        }
        if matches!(ch, '.' | '!' | '?') {
            in_terminal = true;
            continue;
        }
        if in_terminal && ch.is_whitespace() {
            out.push(&text[start..idx]);
            start = idx + ch.len_utf8();
        }
        in_terminal = false;
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out.into_iter().filter(|s| !s.trim().is_empty()).collect()
}
