//! Arbitrary bytes must never panic the run-configuration loader.

#![no_main]
use libfuzzer_sys::fuzz_target;

use annostat_cli::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _: Result<RunConfig, _> = toml::from_str(s);
    }
});
