//! Arbitrary bytes must never panic the feature-matrix import.

#![no_main]
use libfuzzer_sys::fuzz_target;

use annostat::lexfeat::FeatureMatrix;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let meta = serde_json::json!({"state": "standardized", "column_stats": null});
        let _ = FeatureMatrix::from_tsv(s, &meta, "fuzz");
    }
});
