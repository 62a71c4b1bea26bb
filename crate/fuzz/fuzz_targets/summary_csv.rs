//! Arbitrary bytes must never panic the effect-summary import.

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = annostat::posterior::summaries_from_csv(s, "fuzz");
    }
});
