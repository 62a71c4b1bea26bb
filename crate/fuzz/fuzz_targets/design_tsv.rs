//! Arbitrary bytes must never panic the design import (both the TSV body
//! and the JSON manifest are untrusted).

#![no_main]
use libfuzzer_sys::fuzz_target;

use annostat::design::DesignMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        // Split the input on the first blank line: manifest JSON, then TSV.
        let (meta_src, tsv) = match s.split_once("\n\n") {
            Some(pair) => pair,
            None => ("", s),
        };
        let meta: serde_json::Value = match serde_json::from_str(meta_src) {
            Ok(v) => v,
            Err(_) => serde_json::json!({
                "columns": [{"name": "f1", "origin": "L", "parents": []}],
                "annotator_levels": ["a1"],
                "item_levels": ["i1"],
                "contrasts": {},
            }),
        };
        let _ = DesignMatrix::from_tsv(tsv, &meta, "fuzz");
    }
});
