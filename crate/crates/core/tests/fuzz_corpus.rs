//! Replays the fuzz corpus seeds through the same entry points the fuzz
//! targets exercise, so the seeds stay meaningful.

use std::fs;
use std::path::PathBuf;

use gsr_core::cli::{decode_document, encode_document, parse_config, Command, RunConfig};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn config_seeds() {
    for (name, data) in seeds("config_parse") {
        let parsed = parse_config(std::str::from_utf8(&data).unwrap());
        assert_eq!(parsed.is_err(), name.starts_with("malformed"), "{name}");
    }
}

#[test]
fn run_config_seeds() {
    for (name, data) in seeds("run_config") {
        let command = match data[0] % 4 {
            0 => Command::Compute,
            1 => Command::Calibrate,
            2 => Command::Converge,
            _ => Command::Simulate,
        };
        let settings = parse_config(&String::from_utf8_lossy(&data[1..])).unwrap();
        let cfg = RunConfig::from_settings(command, &settings);
        assert_eq!(cfg.is_err(), name == "invalid", "{name}: {cfg:?}");
    }
}

#[test]
fn report_seeds() {
    for (name, data) in seeds("report_json") {
        let text = String::from_utf8(data).unwrap();
        let doc = decode_document(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(encode_document(&doc), text, "{name}");
    }
}
