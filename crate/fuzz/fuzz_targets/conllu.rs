//! Arbitrary bytes must never panic the CoNLL-U parser.

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = annostat::lexfeat::ingest_conllu(s, "fuzz");
    }
});
