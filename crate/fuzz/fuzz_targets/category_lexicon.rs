//! Arbitrary bytes must never panic the category-lexicon parser.

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = annostat::lexfeat::parse_category_lexicon(s, "fuzz", "lex");
        let _ = annostat::lexfeat::parse_hedges(s);
    }
});
