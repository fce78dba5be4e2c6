#![no_main]

use hspde::config::{parse_config, serialize_config};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_config(text) {
        // anything accepted must survive its own canonical form
        let canon = serialize_config(&cfg);
        let back = parse_config(&canon).expect("canonical text parses");
        assert_eq!(serialize_config(&back), canon);
    }
});
