//! Arbitrary bytes must never panic the draws-checkpoint import.

#![no_main]
use libfuzzer_sys::fuzz_target;

use annostat::hsmlm::PosteriorDraws;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = PosteriorDraws::from_chain_csvs(&[s.to_string()], "fuzz");
    }
});
