#![no_main]

use hspde::model::{parse_table_nodes, MeasureKind, SpectralMeasureSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(nodes) = parse_table_nodes(text) else {
        return;
    };
    if let Ok(spec) = SpectralMeasureSpec::new(MeasureKind::Table { nodes }, 1) {
        for r in [0.0, 0.5, 1.0, 10.0, 1e6] {
            let f = spec.profile(r);
            assert!(f.is_finite() && f >= 0.0);
        }
    }
});
