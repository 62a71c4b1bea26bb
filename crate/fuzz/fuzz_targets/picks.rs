//! Arbitrary bytes must never panic the picks-file parser.

#![no_main]
use libfuzzer_sys::fuzz_target;

use annostat::select::ClusterReport;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let report = ClusterReport {
            clusters: vec![
                vec!["a".to_string(), "b".to_string()],
                vec!["c".to_string()],
            ],
            cut_distance: 0.5,
            picks: vec![None, None],
        };
        let _ = report.with_picks(s, "fuzz");
    }
});
