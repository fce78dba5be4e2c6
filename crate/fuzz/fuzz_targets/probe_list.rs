#![no_main]

use hspde::config::parse_probes;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(probes) = parse_probes(text) {
            assert!(!probes.is_empty());
            assert!(probes.iter().all(|p| p.t >= 0.0 && p.x.is_finite()));
        }
    }
});
