//! Arbitrary bytes must never panic the profiles parser.

#![no_main]
use libfuzzer_sys::fuzz_target;

const SCHEMA: &str = "scale = 5\n[gender]\ntype = nominal\nlevels = male | female\nreference = male\n[age]\ntype = ordinal\nlevels = young | old\n";

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let schema = annostat::corpus::parse_schema(SCHEMA, "schema").expect("static schema");
        let _ = annostat::corpus::parse_profiles(s, "fuzz", &schema);
    }
});
