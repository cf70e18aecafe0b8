#![no_main]
use libfuzzer_sys::fuzz_target;

use gsr_core::cli::{parse_config, Command, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Some((&selector, rest)) = data.split_first() else { return };
    let command = match selector % 4 {
        0 => Command::Compute,
        1 => Command::Calibrate,
        2 => Command::Converge,
        _ => Command::Simulate,
    };
    let text = String::from_utf8_lossy(rest);
    if let Ok(settings) = parse_config(&text) {
        if let Ok(cfg) = RunConfig::from_settings(command, &settings) {
            assert!(cfg.theta > 0.0 && cfg.headstart >= 0.0);
            assert!(cfg.threshold.is_some() != cfg.gamma.is_some());
            assert!(cfg.n_list.iter().all(|n| n.is_power_of_two()));
        }
    }
});
