#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ehcontract::io::parse_config(text) {
            // the resolved echo must parse back to the same config
            let echo = cfg.to_toml();
            assert_eq!(ehcontract::io::parse_config(&echo).ok(), Some(cfg));
        }
    }
});
