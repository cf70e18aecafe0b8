//! Command-line behaviour, in process and through the built binary.

use std::process::Command;

use gsr_core::cli::{decode_document, encode_document, run, ResultRecord};

fn gsr(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("gsr").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn compute_theta_tenth() {
    let (code, out, _) = gsr(&["compute", "--theta", "0.1", "--A", "94.34", "--r", "0", "--N", "1024", "--precision", "10"]);
    assert_eq!(code, 0);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["method", "A", "r", "N", "arl", "stadd", "kernel_norm"]);
    let stadd: f64 = rows[1][5].parse().unwrap();
    assert!((stadd - 40.13798).abs() < 5e-5, "{stadd}");
}

#[test]
fn invalid_inputs_exit_2() {
    for args in [
        vec!["compute", "--theta", "1.0", "--A", "-5"],
        vec!["compute", "--theta", "1.0"],
        vec!["compute", "--theta", "1.0", "--A", "5", "--gamma", "100"],
        vec!["calibrate", "--theta", "1.0", "--gamma", "0.5"],
        vec!["simulate", "--theta", "1.0", "--A", "56", "--M", "0"],
        vec!["converge", "--theta", "1.0", "--A", "56", "--N-list", "3,6"],
        vec!["compute", "--theta", "1.0", "--A", "5", "--format", "xml"],
        vec!["compute", "--bogus"],
        vec!["frobnicate"],
    ] {
        let (code, out, err) = gsr(&args);
        assert_eq!(code, 2, "{args:?}: {err}");
        assert!(out.is_empty());
        assert!(!err.is_empty());
    }
}

#[test]
fn numerical_failure_exits_3() {
    let (code, _, err) = gsr(&["compute", "--theta", "0.01", "--A", "99.2", "--N", "8", "--method", "midpoint"]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("singular"));
}

#[test]
fn help_exits_0() {
    let (code, out, _) = gsr(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("converge"));
}

#[test]
fn converge_reports_failed_rows_as_nan() {
    let (code, out, err) = gsr(&["converge", "--theta", "0.01", "--A", "99.2", "--N-list", "2..64", "--method", "midpoint"]);
    assert_eq!(code, 0);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["N", "value", "rate", "err_est", "bound", "method"]);
    for row in &rows[1..6] {
        assert_eq!(row[1], "NaN");
        assert_eq!(&row[2..], ["", "", "", "midpoint"]);
    }
    assert_eq!(rows[6][0], "64");
    assert!((rows[6][1].parse::<f64>().unwrap() - 53.76583).abs() < 1e-3);
    assert_eq!(err.matches("warning:").count(), 5);
}

#[test]
fn single_size_table_has_no_rate() {
    let (code, out, _) = gsr(&["converge", "--theta", "1", "--A", "56", "--N-list", "64"]);
    assert_eq!(code, 0);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][2], "");
    assert!((rows[1][1].parse::<f64>().unwrap() - 5.45167).abs() < 1e-5);
}

#[test]
fn golden_convergence_table() {
    let (code, out, _) = gsr(&["converge", "--theta", "1", "--A", "56", "--N-list", "2..256", "--method", "both", "--precision", "8"]);
    assert_eq!(code, 0);
    let golden = include_str!("golden/converge_theta1_A56.csv");
    assert_eq!(out, golden);
    assert!(!out.contains('\r'));
}

#[test]
fn json_round_trips_bit_exactly() {
    let (code, out, _) = gsr(&["converge", "--theta", "1", "--A", "56", "--N-list", "8..64", "--method", "both", "--format", "json"]);
    assert_eq!(code, 0);
    let doc = decode_document(&out).unwrap();
    assert_eq!(encode_document(&doc), out);
    assert_eq!(doc.results.len(), 8);
    let m = gsr_core::GaussianMeanShift::new(1.0).unwrap();
    let direct = gsr_core::evaluate(&m, gsr_core::Method::Hat, 56.0, 0.0, 32, Default::default())
        .unwrap()
        .1
        .stadd;
    let ResultRecord::Row(row) = &doc.results[2] else { panic!("expected a row") };
    assert_eq!(row.n, 32);
    assert_eq!(row.value.unwrap().to_bits(), direct.to_bits());

    for args in [
        vec!["compute", "--theta", "0.5", "--A", "74.76", "--N", "128", "--method", "both", "--format", "json"],
        vec!["calibrate", "--theta", "1", "--gamma", "50", "--N", "64", "--format", "json"],
        vec!["simulate", "--theta", "1", "--A", "10", "--M", "100", "--mode", "riadd", "--format", "json"],
    ] {
        let (code, out, err) = gsr(&args);
        assert_eq!(code, 0, "{err}");
        let doc = decode_document(&out).unwrap();
        assert_eq!(encode_document(&doc), out, "{args:?}");
    }
    assert!(decode_document("{\"config\": 1}").is_err());
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# theta = 1, first threshold\ntheta = 1.0\nA = 56\nN = 64\nprecision = 8\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let (code, out, _) = gsr(&["compute", "--config", cfg]);
    assert_eq!(code, 0);
    assert!(out.contains(",64,") && out.contains("5.4516723"), "{out}");
    let (code, out, _) = gsr(&["compute", "--config", cfg, "--N", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains(",2,") && out.contains("2.4079137"), "{out}");

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "theta: 1\n").unwrap();
    assert_eq!(gsr(&["compute", "--config", bad.to_str().unwrap()]).0, 2);
    assert_eq!(gsr(&["compute", "--config", "/nonexistent/x.cfg"]).0, 2);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let (code, out, _) = gsr(&["compute", "--theta", "1", "--A", "56", "--N", "32", "--format", "json", "--output", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let doc = decode_document(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc.config.n, 32);
}

#[test]
fn calibrate_reports_threshold() {
    let (code, out, _) = gsr(&["calibrate", "--theta", "1", "--gamma", "100", "--N", "512"]);
    assert_eq!(code, 0);
    let rows = csv_rows(&out);
    let a: f64 = rows[1][2].parse().unwrap();
    let arl: f64 = rows[1][5].parse().unwrap();
    assert!((a / 56.0 - 1.0).abs() < 0.01, "{a}");
    assert!((arl / 100.0 - 1.0).abs() < 1e-3);
}

#[test]
fn simulate_is_deterministic() {
    let args = ["simulate", "--theta", "1", "--A", "56", "--mode", "arl", "--M", "2000", "--seed", "7"];
    let (c1, a, _) = gsr(&args);
    let (c2, b, _) = gsr(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    assert!(a.starts_with("mode,A,r,M,seed,mean,std_error,truncated\narl,56,0,2000,7,"));
}

#[test]
fn simulate_warns_on_short_nu() {
    let (code, _, err) = gsr(&["simulate", "--theta", "1", "--A", "56", "--mode", "stadd", "--nu", "10", "--M", "100"]);
    assert_eq!(code, 0);
    assert!(err.contains("warning:"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_gsr");
    let out = Command::new(bin)
        .args(["compute", "--theta", "1.0", "--A", "56.0", "--r", "0", "--N", "128", "--method", "hat"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("5.45701"), "{text}");
    let out = Command::new(bin).args(["compute", "--theta", "1.0", "--A", "-5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(bin)
        .args(["compute", "--theta", "0.01", "--A", "99.2", "--N", "4", "--method", "midpoint"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
