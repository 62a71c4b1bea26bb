//! Tokenization and the plain-text feature extractors must accept any text.

#![no_main]
use libfuzzer_sys::fuzz_target;

use annostat::corpus::ItemId;
use annostat::lexfeat::{
    info_features, readability_features, richness_features, surface_features, tokenize,
};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let item = tokenize(ItemId::from("fuzz"), s);
        let _ = surface_features(&item);
        let _ = readability_features(&item);
        let _ = richness_features(&item);
        let _ = info_features(&item);
    }
});
