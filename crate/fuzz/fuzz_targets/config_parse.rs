#![no_main]
use libfuzzer_sys::fuzz_target;

use gsr_core::cli::{parse_config, KEYS};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(settings) = parse_config(text) {
            assert!(settings.keys().all(|k| KEYS.contains(&k.as_str())));
            assert!(settings.values().all(|v| !v.is_empty()));
        }
    }
});
