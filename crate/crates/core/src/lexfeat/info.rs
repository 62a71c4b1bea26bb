//! Information-theoretic features: Shannon entropy and compressibility.
//!
//! Compressibility uses the bundled LZ77-class compressor below rather than
//! an external library so that the ratio is bit-stable across platforms and
//! versions. Parameters are fixed and versioned ([`COMPRESSOR_VERSION`]):
//! window 4096 bytes, minimum match 3, maximum match 255, greedy longest
//! match with the smallest offset on ties. The encoded stream is a control
//! byte per 8 tokens (bit set = match) followed by 1 byte per literal or
//! 3 bytes per match (12-bit offset, 4-bit spare, 8-bit length).

use std::collections::BTreeMap;

use crate::lexfeat::{PartialFeatures, TokenizedItem};

pub const COMPRESSOR_VERSION: &str = "lz77-v1";

const WINDOW: usize = 4096;
const MIN_MATCH: usize = 3;
const MAX_MATCH: usize = 255;

/// Size in bytes of the LZ77 token stream for `data` (the data itself is
/// never materialized; only the length matters for the ratio).
pub fn lz77_compressed_len(data: &[u8]) -> usize {
    let mut tokens = 0usize;
    let mut token_bytes = 0usize;
    let mut pos = 0usize;
    while pos < data.len() {
        let window_start = pos.saturating_sub(WINDOW);
        let mut best_len = 0usize;
        let mut _best_offset = 0usize;
        let max_len = MAX_MATCH.min(data.len() - pos);
        for start in window_start..pos {
            let mut len = 0usize;
            while len < max_len && data[start + len] == data[pos + len] {
                len += 1;
            }
            // Strictly longer wins; on ties the earliest start (largest
            // offset) found first is kept, making the parse deterministic.
            if len > best_len {
                best_len = len;
                _best_offset = pos - start;
            }
        }
        if best_len >= MIN_MATCH {
            token_bytes += 3;
            pos += best_len;
        } else {
            token_bytes += 1;
            pos += 1;
        }
        tokens += 1;
    }
    token_bytes + tokens.div_ceil(8)
}

/// Shannon entropy over word-token relative frequencies (lowercased), plus
/// the compressed/raw byte ratio of the item text.
pub fn info_features(item: &TokenizedItem) -> PartialFeatures {
    let mut out = PartialFeatures::default();
    let mut freq: BTreeMap<String, usize> = BTreeMap::new();
    let mut n = 0usize;
    for t in item.word_tokens() {
        *freq.entry(t.surface.to_lowercase()).or_insert(0) += 1;
        n += 1;
    }
    let entropy = if n == 0 {
        0.0
    } else {
        let nf = n as f64;
        -freq
            .values()
            .map(|&c| {
                let p = c as f64 / nf;
                p * p.log2()
            })
            .sum::<f64>()
    };
    out.insert("entropy", entropy);

    let raw = item.text.as_bytes();
    let compressibility = if raw.is_empty() {
        0.0
    } else {
        lz77_compressed_len(raw) as f64 / raw.len() as f64
    };
    out.insert("compressibility", compressibility);
    out
}
