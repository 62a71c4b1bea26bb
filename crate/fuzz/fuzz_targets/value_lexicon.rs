//! Arbitrary bytes must never panic the value-lexicon parser.

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = annostat::lexfeat::parse_value_lexicon(s, "fuzz", "norm");
    }
});
