//! Command-line front end: `compute`, `calibrate`, `converge`, `simulate`.
//!
//! Settings come from an optional flat `key = value` file (`--config`) and
//! from flags; flags win. Both sources are merged into a [`Settings`] map and
//! then validated into a typed [`RunConfig`].
//!
//! Exit codes: 0 on success, 2 for an invalid configuration, 3 for a
//! numerical failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::accuracy::{convergence_table, quantity_bound, ConvergenceRow, Quantity};
use crate::calibration::{calibrate, CalibrationSpec};
use crate::collocation::Method;
use crate::error::{GsrError, Result};
use crate::mc::{
    default_cap, estimate_riadd_truncated, estimate_run_length, estimate_stadd_multicyclic,
    McConfig, McEstimate,
};
use crate::metrics::{evaluate, EvalOptions, PerformanceReport};
use crate::model::{GaussianMeanShift, Regime};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const DEFAULT_N: usize = 1024;
pub const DEFAULT_N_LIST: &str = "2..4096";
pub const DEFAULT_PRECISION: usize = 6;
pub const DEFAULT_REPLICATIONS: usize = 10_000;
/// Default multi-cyclic change-point, in units of the ARL lower bound `A − r`.
pub const DEFAULT_NU_FACTOR: f64 = 50.0;
/// Default `k_max` for RIADD runs, in units of `A`.
pub const DEFAULT_K_MAX_FACTOR: f64 = 20.0;

/// Keys accepted in a config file; each matches a long flag.
pub const KEYS: &[&str] = &[
    "theta", "A", "gamma", "r", "N", "N-list", "method", "quantity", "M", "seed", "nu", "k-max",
    "mode", "format", "output", "precision",
];

/// Raw, unvalidated settings keyed by flag name.
pub type Settings = BTreeMap<String, String>;

/// Parses a config file: one `key = value` per line, `#` starts a comment,
/// blank lines are ignored. Keys are the long flag names (`N-list` may also
/// be written `N_list`).
pub fn parse_config(text: &str) -> Result<Settings> {
    let mut out = Settings::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| GsrError::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if !KEYS.contains(&key.as_str()) {
            return Err(GsrError::Config(format!("line {}: unknown key '{key}'", i + 1)));
        }
        if value.is_empty() {
            return Err(GsrError::Config(format!("line {}: empty value for '{key}'", i + 1)));
        }
        if out.insert(key.clone(), value.to_string()).is_some() {
            return Err(GsrError::Config(format!("line {}: duplicate key '{key}'", i + 1)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Compute,
    Calibrate,
    Converge,
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Hat,
    Midpoint,
    Both,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Hat => vec![Method::Hat],
            MethodChoice::Midpoint => vec![Method::Midpoint],
            MethodChoice::Both => vec![Method::Hat, Method::Midpoint],
        }
    }
}

/// What `simulate` estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// ARL to false alarm.
    Arl,
    /// `E₀[T]`, change at the start.
    Delay,
    /// Multi-cyclic stationary delay.
    Stadd,
    /// Integral delay over the ARL.
    Riadd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub theta: f64,
    /// Detection threshold `A` (all commands but `calibrate`).
    pub threshold: Option<f64>,
    /// Target ARL (`calibrate` only).
    pub gamma: Option<f64>,
    pub headstart: f64,
    pub n: usize,
    pub n_list: Vec<usize>,
    pub method: MethodChoice,
    pub quantity: Quantity,
    pub replications: usize,
    pub seed: u64,
    pub nu: Option<u64>,
    pub k_max: Option<u64>,
    pub mode: Mode,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub precision: usize,
}

fn invalid(msg: impl Into<String>) -> GsrError {
    GsrError::InvalidArgument(msg.into())
}

fn parse_value<T: std::str::FromStr>(s: &Settings, key: &str) -> Result<Option<T>> {
    s.get(key)
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| invalid(format!("invalid value '{v}' for {key}")))
        })
        .transpose()
}

fn parse_lower<T>(s: &Settings, key: &str, table: &[(&str, T)]) -> Result<Option<T>>
where
    T: Copy,
{
    let Some(v) = s.get(key) else { return Ok(None) };
    let v = v.trim().to_ascii_lowercase();
    table
        .iter()
        .find(|(name, _)| *name == v)
        .map(|&(_, t)| Some(t))
        .ok_or_else(|| invalid(format!("invalid value '{v}' for {key}")))
}

/// Parses `2,4,8` or the doubling range `2..4096`.
pub fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    let bad = || invalid(format!("invalid N list '{text}'"));
    let ns: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if lo == 0 || hi < lo {
            return Err(bad());
        }
        std::iter::successors(Some(lo), |&n| n.checked_mul(2))
            .take_while(|&n| n <= hi)
            .collect()
    } else {
        text.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if let Some(n) = ns.iter().find(|n| !n.is_power_of_two()) {
        return Err(invalid(format!("N = {n} is not a power of two")));
    }
    crate::accuracy::validate_doubling(&ns)?;
    Ok(ns)
}

impl RunConfig {
    /// Validates merged settings for `command`.
    pub fn from_settings(command: Command, s: &Settings) -> Result<Self> {
        if let Some(k) = s.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(GsrError::Config(format!("unknown key '{k}'")));
        }
        let theta: f64 = parse_value(s, "theta")?.ok_or_else(|| invalid("theta is required"))?;
        if !(theta.is_finite() && theta > 0.0) {
            return Err(invalid(format!("theta must be positive, got {theta}")));
        }
        let threshold: Option<f64> = parse_value(s, "A")?;
        let gamma: Option<f64> = parse_value(s, "gamma")?;
        match (command, threshold, gamma) {
            (Command::Calibrate, None, Some(g)) => {
                if !(g.is_finite() && g > 1.0) {
                    return Err(invalid(format!("gamma must exceed 1, got {g}")));
                }
            }
            (Command::Calibrate, _, _) => {
                return Err(invalid("calibrate takes --gamma and no --A"));
            }
            (_, Some(a), None) => {
                if !(a.is_finite() && a > 0.0) {
                    return Err(invalid(format!("A must be positive and finite, got {a}")));
                }
            }
            _ => return Err(invalid("this command takes --A and no --gamma")),
        }
        let headstart: f64 = parse_value(s, "r")?.unwrap_or(0.0);
        if !(headstart.is_finite() && headstart >= 0.0) {
            return Err(invalid(format!("r must be nonnegative, got {headstart}")));
        }
        if let Some(a) = threshold {
            if headstart > a {
                return Err(invalid(format!("r = {headstart} exceeds A = {a}")));
            }
        }
        let n: usize = parse_value(s, "N")?.unwrap_or(DEFAULT_N);
        if n < 2 {
            return Err(invalid(format!("N must be at least 2, got {n}")));
        }
        let n_list = match s.get("N-list") {
            Some(t) => parse_n_list(t)?,
            None if command == Command::Converge => parse_n_list(DEFAULT_N_LIST)?,
            None => Vec::new(),
        };
        let method = parse_lower(
            s,
            "method",
            &[
                ("hat", MethodChoice::Hat),
                ("midpoint", MethodChoice::Midpoint),
                ("both", MethodChoice::Both),
            ],
        )?
        .unwrap_or(MethodChoice::Hat);
        let quantity = parse_lower(s, "quantity", &[("arl", Quantity::Arl), ("stadd", Quantity::Stadd)])?
            .unwrap_or(Quantity::Stadd);
        let replications: usize = parse_value(s, "M")?.unwrap_or(DEFAULT_REPLICATIONS);
        if replications < 1 {
            return Err(invalid("M must be at least 1"));
        }
        let seed: u64 = parse_value(s, "seed")?.unwrap_or(0);
        let nu: Option<u64> = parse_value(s, "nu")?;
        let k_max: Option<u64> = parse_value(s, "k-max")?;
        let mode = parse_lower(
            s,
            "mode",
            &[
                ("arl", Mode::Arl),
                ("delay", Mode::Delay),
                ("stadd", Mode::Stadd),
                ("riadd", Mode::Riadd),
            ],
        )?
        .unwrap_or(Mode::Arl);
        let format = parse_lower(s, "format", &[("csv", Format::Csv), ("json", Format::Json)])?
            .unwrap_or(Format::Csv);
        let precision: usize = parse_value(s, "precision")?.unwrap_or(DEFAULT_PRECISION);
        if !(1..=17).contains(&precision) {
            return Err(invalid(format!("precision must lie in 1..=17, got {precision}")));
        }
        Ok(Self {
            command,
            theta,
            threshold,
            gamma,
            headstart,
            n,
            n_list,
            method,
            quantity,
            replications,
            seed,
            nu,
            k_max,
            mode,
            format,
            output: s.get("output").map(PathBuf::from),
            precision,
        })
    }

    fn a(&self) -> f64 {
        self.threshold.expect("validated")
    }

    fn mc_config(&self) -> McConfig {
        let a = self.a();
        let scale = (a - self.headstart).max(1.0);
        McConfig {
            threshold: a,
            headstart: self.headstart,
            nu: self.nu.unwrap_or((DEFAULT_NU_FACTOR * scale).ceil() as u64),
            replications: self.replications,
            seed: self.seed,
            cap: default_cap(a),
        }
    }
}

/// One entry of the `results` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResultRecord {
    Report(PerformanceReport),
    Calibration(CalibrationRecord),
    Row(ConvergenceRow),
    Estimate(EstimateRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub gamma: f64,
    pub threshold: f64,
    pub iterations: usize,
    pub report: PerformanceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub mode: Mode,
    pub threshold: f64,
    pub headstart: f64,
    pub seed: u64,
    pub estimate: McEstimate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DocumentDiagnostics {
    pub version: String,
    pub warnings: Vec<String>,
}

/// The JSON output: `{config, results, diagnostics}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub config: RunConfig,
    pub results: Vec<ResultRecord>,
    pub diagnostics: DocumentDiagnostics,
}

/// Parses a JSON document produced by the `--format json` output.
pub fn decode_document(text: &str) -> Result<Document> {
    serde_json::from_str(text).map_err(|e| GsrError::Config(format!("malformed report: {e}")))
}

pub fn encode_document(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents contain only finite numbers");
    s.push('\n');
    s
}

/// `x` with `digits` significant digits, `%g` style. Non-finite values are
/// written `NaN`, `inf`, `-inf`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mant))
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

struct Outcome {
    results: Vec<ResultRecord>,
    warnings: Vec<String>,
}

fn model(cfg: &RunConfig) -> Result<GaussianMeanShift> {
    GaussianMeanShift::new(cfg.theta)
}

fn cmd_compute(cfg: &RunConfig) -> Result<Outcome> {
    let m = model(cfg)?;
    let mut results = Vec::new();
    let mut warnings = Vec::new();
    for method in cfg.method.methods() {
        let (s, mut report) =
            evaluate(&m, method, cfg.a(), cfg.headstart, cfg.n, EvalOptions::default())?;
        if let Some(d) = report.diagnostics.as_mut() {
            if method == Method::Hat && cfg.n >= 3 {
                d.arl_bound = quantity_bound(&m, &s, Quantity::Arl, cfg.headstart)?;
                d.stadd_bound = quantity_bound(&m, &s, Quantity::Stadd, cfg.headstart)?;
            }
            warnings.extend(d.warnings.iter().cloned());
        }
        results.push(ResultRecord::Report(report));
    }
    Ok(Outcome { results, warnings })
}

fn cmd_calibrate(cfg: &RunConfig) -> Result<Outcome> {
    let m = model(cfg)?;
    let gamma = cfg.gamma.expect("validated");
    let mut results = Vec::new();
    let mut warnings = Vec::new();
    for method in cfg.method.methods() {
        let mut spec = CalibrationSpec::new(gamma, cfg.n);
        spec.headstart = cfg.headstart;
        spec.method = method;
        let c = calibrate(&m, &spec)?;
        warnings.extend(c.warnings.iter().map(|w| format!("{method}: {w}")));
        results.push(ResultRecord::Calibration(CalibrationRecord {
            gamma,
            threshold: c.threshold,
            iterations: c.history.len(),
            report: c.report,
        }));
    }
    Ok(Outcome { results, warnings })
}

fn cmd_converge(cfg: &RunConfig) -> Result<Outcome> {
    let m = model(cfg)?;
    let mut results = Vec::new();
    let mut warnings = Vec::new();
    for method in cfg.method.methods() {
        let rows = convergence_table(&m, cfg.a(), cfg.headstart, &cfg.n_list, method, cfg.quantity)?;
        for row in rows {
            if let crate::accuracy::RowStatus::Failed(reason) = &row.status {
                warnings.push(format!("{method} N={}: {reason}", row.n));
            }
            results.push(ResultRecord::Row(row));
        }
    }
    Ok(Outcome { results, warnings })
}

fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let m = model(cfg)?;
    let mc = cfg.mc_config();
    let estimate = match cfg.mode {
        Mode::Arl => estimate_run_length(&m, &mc, Regime::PreChange)?,
        Mode::Delay => estimate_run_length(&m, &mc, Regime::PostChange)?,
        Mode::Stadd => estimate_stadd_multicyclic(&m, &mc)?,
        Mode::Riadd => {
            let k_max = cfg
                .k_max
                .unwrap_or((DEFAULT_K_MAX_FACTOR * cfg.a().max(1.0)).ceil() as u64);
            estimate_riadd_truncated(&m, &mc, k_max)?
        }
    };
    let warnings = estimate.warnings.clone();
    Ok(Outcome {
        results: vec![ResultRecord::Estimate(EstimateRecord {
            mode: cfg.mode,
            threshold: mc.threshold,
            headstart: mc.headstart,
            seed: mc.seed,
            estimate,
        })],
        warnings,
    })
}

fn csv_header(command: Command) -> &'static [&'static str] {
    match command {
        Command::Compute => &["method", "A", "r", "N", "arl", "stadd", "kernel_norm"],
        Command::Calibrate => &["method", "gamma", "A", "r", "N", "arl", "stadd", "iterations"],
        Command::Converge => &["N", "value", "rate", "err_est", "bound", "method"],
        Command::Simulate => &["mode", "A", "r", "M", "seed", "mean", "std_error", "truncated"],
    }
}

fn csv_record(rec: &ResultRecord, p: usize) -> Vec<String> {
    let f = |x: f64| format_sig(x, p);
    let opt = |x: Option<f64>| x.map(f).unwrap_or_default();
    match rec {
        ResultRecord::Report(r) => vec![
            r.method.to_string(),
            f(r.threshold),
            f(r.headstart),
            r.n.to_string(),
            f(r.arl),
            f(r.stadd),
            opt(r.diagnostics.as_ref().map(|d| d.kernel_norm)),
        ],
        ResultRecord::Calibration(c) => vec![
            c.report.method.to_string(),
            f(c.gamma),
            f(c.threshold),
            f(c.report.headstart),
            c.report.n.to_string(),
            f(c.report.arl),
            f(c.report.stadd),
            c.iterations.to_string(),
        ],
        ResultRecord::Row(r) => vec![
            r.n.to_string(),
            f(r.value.unwrap_or(f64::NAN)),
            opt(r.rate),
            opt(r.err_est),
            opt(r.bound),
            r.method.to_string(),
        ],
        ResultRecord::Estimate(e) => {
            let mode = serde_json::to_value(e.mode).expect("plain enum");
            vec![
                mode.as_str().unwrap_or_default().to_string(),
                f(e.threshold),
                f(e.headstart),
                e.estimate.replications.to_string(),
                e.seed.to_string(),
                f(e.estimate.mean),
                f(e.estimate.std_error),
                e.estimate.truncated.to_string(),
            ]
        }
    }
}

fn render_csv(cfg: &RunConfig, results: &[ResultRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| GsrError::Config(format!("csv output: {e}"));
    w.write_record(csv_header(cfg.command)).map_err(io)?;
    for rec in results {
        w.write_record(csv_record(rec, cfg.precision)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| GsrError::Config(format!("csv output: {e}")))?;
    Ok(String::from_utf8(bytes).expect("ascii output"))
}

/// Runs a validated configuration and renders its output.
pub fn execute(cfg: &RunConfig) -> Result<(String, Vec<String>)> {
    let outcome = match cfg.command {
        Command::Compute => cmd_compute(cfg)?,
        Command::Calibrate => cmd_calibrate(cfg)?,
        Command::Converge => cmd_converge(cfg)?,
        Command::Simulate => cmd_simulate(cfg)?,
    };
    let text = match cfg.format {
        Format::Csv => render_csv(cfg, &outcome.results)?,
        Format::Json => encode_document(&Document {
            config: cfg.clone(),
            results: outcome.results,
            diagnostics: DocumentDiagnostics {
                version: env!("CARGO_PKG_VERSION").to_string(),
                warnings: outcome.warnings.clone(),
            },
        }),
    };
    Ok((text, outcome.warnings))
}

/// Exit code for an error.
pub fn exit_code(e: &GsrError) -> i32 {
    match e {
        GsrError::Domain(_) | GsrError::InvalidArgument(_) | GsrError::Config(_) => EXIT_INVALID,
        GsrError::NotContractive { .. }
        | GsrError::NumericalFailure { .. }
        | GsrError::BracketFailure { .. }
        | GsrError::NoConvergence { .. } => EXIT_NUMERICAL,
    }
}

#[derive(Parser, Debug)]
#[command(name = "gsr", version, about = "Performance evaluation of the Generalized Shiryaev-Roberts procedure")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// ARL and STADD at a given threshold.
    Compute(Flags),
    /// Threshold A giving a target ARL.
    Calibrate(Flags),
    /// Convergence table over doubling partition sizes.
    Converge(Flags),
    /// Monte Carlo estimates.
    Simulate(Flags),
}

#[derive(Args, Debug, Default)]
#[command(allow_negative_numbers = true)]
struct Flags {
    /// Post-change mean of the Gaussian observations.
    #[arg(long)]
    theta: Option<String>,
    /// Detection threshold.
    #[arg(long = "A")]
    a: Option<String>,
    /// Target ARL to false alarm (calibrate).
    #[arg(long)]
    gamma: Option<String>,
    /// Headstart.
    #[arg(long)]
    r: Option<String>,
    /// Partition size.
    #[arg(long = "N")]
    n: Option<String>,
    /// Partition sizes, `2,4,8` or `2..4096` (converge).
    #[arg(long = "N-list")]
    n_list: Option<String>,
    /// hat | midpoint | both.
    #[arg(long)]
    method: Option<String>,
    /// arl | stadd (converge).
    #[arg(long)]
    quantity: Option<String>,
    /// Monte Carlo replications.
    #[arg(long = "M")]
    m: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Change-point for multi-cyclic simulation.
    #[arg(long)]
    nu: Option<String>,
    /// Last change-point simulated in riadd mode.
    #[arg(long = "k-max")]
    k_max: Option<String>,
    /// arl | delay | stadd | riadd (simulate).
    #[arg(long)]
    mode: Option<String>,
    /// csv | json.
    #[arg(long)]
    format: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long)]
    output: Option<String>,
    /// Significant digits in CSV output.
    #[arg(long)]
    precision: Option<String>,
    /// key = value settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn pairs(self) -> [(&'static str, Option<String>); 16] {
        [
            ("theta", self.theta),
            ("A", self.a),
            ("gamma", self.gamma),
            ("r", self.r),
            ("N", self.n),
            ("N-list", self.n_list),
            ("method", self.method),
            ("quantity", self.quantity),
            ("M", self.m),
            ("seed", self.seed),
            ("nu", self.nu),
            ("k-max", self.k_max),
            ("mode", self.mode),
            ("format", self.format),
            ("output", self.output),
            ("precision", self.precision),
        ]
    }
}

fn build_config(sub: Sub) -> Result<RunConfig> {
    let (command, flags) = match sub {
        Sub::Compute(f) => (Command::Compute, f),
        Sub::Calibrate(f) => (Command::Calibrate, f),
        Sub::Converge(f) => (Command::Converge, f),
        Sub::Simulate(f) => (Command::Simulate, f),
    };
    let mut settings = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                GsrError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            parse_config(&text)?
        }
        None => Settings::new(),
    };
    for (key, value) in flags.pairs() {
        if let Some(v) = value {
            settings.insert(key.to_string(), v);
        }
    }
    RunConfig::from_settings(command, &settings)
}

/// Entry point shared by the binary and the tests. `args` includes the
/// program name.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_INVALID
                }
            };
        }
    };
    let result = build_config(cli.command).and_then(|cfg| {
        let (text, warnings) = execute(&cfg)?;
        Ok((cfg, text, warnings))
    });
    let (cfg, text, warnings) = match result {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };
    for w in &warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    match &cfg.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                return EXIT_INVALID;
            }
        }
        None => {
            if stdout.write_all(text.as_bytes()).is_err() {
                return EXIT_INVALID;
            }
        }
    }
    EXIT_OK
}
