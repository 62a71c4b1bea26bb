//! Arbitrary bytes must never panic the schema parser.

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = annostat::corpus::parse_schema(s, "fuzz");
    }
});
