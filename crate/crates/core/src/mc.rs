//! Monte Carlo oracle: direct simulation of the GSR statistic
//! `R_{n+1} = (1 + R_n) Λ_{n+1}`, `R_0 = r`, stopped at the first `n ≥ 1`
//! with `R_n ≥ A`.
//!
//! Nothing here touches the integral-equation machinery. Every replication
//! draws from its own ChaCha8 stream, selected by `(seed, replication)`, so
//! results are reproducible bit for bit regardless of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GsrError, Result};
use crate::model::{LrModel, Regime};

/// Stationarity heuristic: warn when `ν < STATIONARITY_FACTOR · (A − r)`.
pub const STATIONARITY_FACTOR: f64 = 10.0;
/// Runs stopping past the cap are counted as truncated.
pub const MIN_CAP_FACTOR: f64 = 100.0;
/// Warn when more than this fraction of runs is truncated.
pub const TRUNCATION_WARN_FRACTION: f64 = 1e-3;
/// Warn when the pre-change run outlives `k_max` this often.
pub const RIADD_TAIL_WARN: f64 = 0.01;
/// Values of the statistic above this are reported as overflow.
pub const OVERFLOW_LIMIT: f64 = 1e300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub threshold: f64,
    pub headstart: f64,
    /// Change-point for multi-cyclic runs: observations `1..=ν` are
    /// pre-change, `ν+1..` post-change.
    pub nu: u64,
    pub replications: usize,
    pub seed: u64,
    /// Upper limit on simulated run length (or post-change delay).
    pub cap: u64,
}

impl McConfig {
    pub fn new(threshold: f64, replications: usize, seed: u64) -> Self {
        Self {
            threshold,
            headstart: 0.0,
            nu: 0,
            replications,
            seed,
            cap: default_cap(threshold),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(GsrError::InvalidArgument(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if !(self.headstart.is_finite() && self.headstart >= 0.0) {
            return Err(GsrError::InvalidArgument(format!(
                "headstart must be nonnegative, got {}",
                self.headstart
            )));
        }
        if self.replications < 1 {
            return Err(GsrError::InvalidArgument("need at least one replication".into()));
        }
        if self.threshold.is_finite() && (self.cap as f64) < MIN_CAP_FACTOR * self.threshold {
            return Err(GsrError::InvalidArgument(format!(
                "cap {} is below {MIN_CAP_FACTOR} * A",
                self.cap
            )));
        }
        Ok(())
    }
}

/// `max(100 A, 10⁴)` observations.
pub fn default_cap(threshold: f64) -> u64 {
    if threshold.is_finite() {
        (MIN_CAP_FACTOR * threshold).ceil().max(1e4) as u64
    } else {
        u64::MAX
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√M` (delta method for ratios).
    pub std_error: f64,
    pub replications: usize,
    /// Runs that hit the cap. Their capped length is included in the mean.
    pub truncated: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl McEstimate {
    /// `|mean − target| ≤ k · SE`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// Welford running mean and variance.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Independent stream `index` of the generator seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    /// Stopping time, or the cap when truncated.
    pub length: u64,
    pub truncated: bool,
}

/// One run of the procedure with every observation drawn from `regime`.
pub fn run_length<M: LrModel, R: rand::Rng + ?Sized>(
    model: &M,
    threshold: f64,
    headstart: f64,
    regime: Regime,
    rng: &mut R,
    cap: u64,
) -> RunOutcome {
    let mut stat = headstart;
    for n in 1..=cap {
        stat = (1.0 + stat) * model.sample_lr(regime, rng);
        if stat >= threshold {
            return RunOutcome {
                length: n,
                truncated: false,
            };
        }
    }
    RunOutcome {
        length: cap,
        truncated: true,
    }
}

fn truncation_warning(truncated: usize, replications: usize) -> Option<String> {
    let frac = truncated as f64 / replications as f64;
    (frac > TRUNCATION_WARN_FRACTION).then(|| {
        format!("{truncated} of {replications} runs hit the length cap ({:.3}%)", 100.0 * frac)
    })
}

/// Mean run length: the ARL to false alarm for `PreChange`, the
/// post-change delay `E₀[T]` for `PostChange`.
pub fn estimate_run_length<M: LrModel>(
    model: &M,
    cfg: &McConfig,
    regime: Regime,
) -> Result<McEstimate> {
    cfg.validate()?;
    let mut acc = Accumulator::default();
    let mut truncated = 0;
    for i in 0..cfg.replications {
        let mut rng = stream(cfg.seed, i as u64);
        let out = run_length(model, cfg.threshold, cfg.headstart, regime, &mut rng, cfg.cap);
        truncated += out.truncated as usize;
        acc.push(out.length as f64);
    }
    Ok(McEstimate {
        mean: acc.mean,
        std_error: acc.std_error(),
        replications: cfg.replications,
        truncated,
        warnings: truncation_warning(truncated, cfg.replications).into_iter().collect(),
    })
}

/// `E∞[R_n^r − n − r]` with no stopping; zero by the martingale property.
pub fn estimate_martingale_drift<M: LrModel>(
    model: &M,
    headstart: f64,
    steps: u64,
    replications: usize,
    seed: u64,
) -> Result<McEstimate> {
    if replications < 1 {
        return Err(GsrError::InvalidArgument("need at least one replication".into()));
    }
    let mut acc = Accumulator::default();
    let mut overflowed = 0;
    for i in 0..replications {
        let mut rng = stream(seed, i as u64);
        let mut stat = headstart;
        for _ in 0..steps {
            stat = (1.0 + stat) * model.sample_lr(Regime::PreChange, &mut rng);
        }
        if stat > OVERFLOW_LIMIT {
            overflowed += 1;
        }
        acc.push(stat - steps as f64 - headstart);
    }
    Ok(McEstimate {
        mean: acc.mean,
        std_error: acc.std_error(),
        replications,
        truncated: overflowed,
        warnings: if overflowed > 0 {
            vec![format!("{overflowed} paths exceeded {OVERFLOW_LIMIT:e}")]
        } else {
            Vec::new()
        },
    })
}

/// Detection delay `T_{I_ν} − ν` under repeated application of the procedure:
/// after every false alarm before `ν` the statistic restarts at `r`.
///
/// Averaged over replications this estimates the stationary average
/// detection delay once `ν` is large compared to the ARL.
pub fn estimate_stadd_multicyclic<M: LrModel>(model: &M, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    let scale = (cfg.threshold - cfg.headstart).max(1.0);
    if (cfg.nu as f64) < STATIONARITY_FACTOR * scale {
        warnings.push(format!(
            "nu = {} is small relative to the ARL (lower bound A - r = {scale}); \
             the stationary regime may not be reached",
            cfg.nu
        ));
    }
    let mut acc = Accumulator::default();
    let mut truncated = 0;
    for i in 0..cfg.replications {
        let mut rng = stream(cfg.seed, i as u64);
        let mut stat = cfg.headstart;
        for _ in 0..cfg.nu {
            stat = (1.0 + stat) * model.sample_lr(Regime::PreChange, &mut rng);
            if stat >= cfg.threshold {
                stat = cfg.headstart;
            }
        }
        let out = run_length(
            model,
            cfg.threshold,
            stat,
            Regime::PostChange,
            &mut rng,
            cfg.cap,
        );
        truncated += out.truncated as usize;
        acc.push(out.length as f64);
    }
    warnings.extend(truncation_warning(truncated, cfg.replications));
    Ok(McEstimate {
        mean: acc.mean,
        std_error: acc.std_error(),
        replications: cfg.replications,
        truncated,
        warnings,
    })
}

/// Generalized STADD through the integral delay,
/// `(r E₀[T] + Σ_k E_k[(T − k)⁺]) / (E∞[T] + r)`, which for `r = 0` is
/// `IADD/ARL`.
///
/// Each replication simulates one pre-change path; for every change-point
/// `k` before that path stops (and `k ≤ k_max`) the post-change continuation
/// from `R_k` is simulated on a second stream. The pre-change prefix is thus
/// shared by all `k` (common random numbers). The ratio's standard error
/// comes from the delta method.
pub fn estimate_riadd_truncated<M: LrModel>(
    model: &M,
    cfg: &McConfig,
    k_max: u64,
) -> Result<McEstimate> {
    cfg.validate()?;
    let r = cfg.headstart;
    let m = cfg.replications;
    let mut nums = Vec::with_capacity(m);
    let mut dens = Vec::with_capacity(m);
    let (mut truncated, mut tail) = (0usize, 0usize);
    for i in 0..m {
        let mut pre = stream(cfg.seed, 2 * i as u64);
        let mut post = stream(cfg.seed, 2 * i as u64 + 1);
        let mut stat = r;
        let mut integral = 0.0;
        let mut first_delay = 0.0;
        let mut stop = cfg.cap;
        let mut hit_cap = true;
        for n in 1..=cfg.cap {
            let k = n - 1;
            if k <= k_max {
                let out = run_length(model, cfg.threshold, stat, Regime::PostChange, &mut post, cfg.cap);
                truncated += out.truncated as usize;
                integral += out.length as f64;
                if k == 0 {
                    first_delay = out.length as f64;
                }
            }
            stat = (1.0 + stat) * model.sample_lr(Regime::PreChange, &mut pre);
            if stat >= cfg.threshold {
                stop = n;
                hit_cap = false;
                break;
            }
        }
        truncated += hit_cap as usize;
        if stop > k_max + 1 {
            tail += 1;
        }
        nums.push(r * first_delay + integral);
        dens.push(stop as f64 + r);
    }
    let mean_num = nums.iter().sum::<f64>() / m as f64;
    let mean_den = dens.iter().sum::<f64>() / m as f64;
    let ratio = mean_num / mean_den;
    let std_error = if m > 1 {
        let var = nums
            .iter()
            .zip(&dens)
            .map(|(a, b)| (a - ratio * b).powi(2))
            .sum::<f64>()
            / (m - 1) as f64;
        (var / m as f64).sqrt() / mean_den
    } else {
        0.0
    };
    let mut warnings = Vec::new();
    let tail_frac = tail as f64 / m as f64;
    if tail_frac > RIADD_TAIL_WARN {
        warnings.push(format!(
            "pre-change runs outlived k_max = {k_max} in {:.2}% of replications; widen k_max",
            100.0 * tail_frac
        ));
    }
    warnings.extend(truncation_warning(truncated, m));
    Ok(McEstimate {
        mean: ratio,
        std_error,
        replications: m,
        truncated,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianMeanShift;

    #[test]
    fn vanishing_threshold_stops_immediately() {
        let m = GaussianMeanShift::new(1.0).unwrap();
        let mut rng = stream(1, 0);
        for _ in 0..100 {
            let out = run_length(&m, 1e-300, 0.0, Regime::PreChange, &mut rng, 10);
            assert_eq!(out.length, 1);
            assert!(!out.truncated);
        }
    }

    #[test]
    fn cap_marks_truncation() {
        let m = GaussianMeanShift::new(0.01).unwrap();
        let mut rng = stream(2, 0);
        let out = run_length(&m, 1e9, 0.0, Regime::PreChange, &mut rng, 50);
        assert_eq!(out, RunOutcome { length: 50, truncated: true });
    }

    #[test]
    fn config_validation() {
        let m = GaussianMeanShift::new(1.0).unwrap();
        let mut cfg = McConfig::new(56.0, 0, 1);
        assert!(estimate_run_length(&m, &cfg, Regime::PreChange).is_err());
        cfg.replications = 10;
        cfg.cap = 100;
        assert!(estimate_run_length(&m, &cfg, Regime::PreChange).is_err());
        cfg.cap = default_cap(56.0);
        assert!(estimate_run_length(&m, &cfg, Regime::PreChange).is_ok());
    }

    #[test]
    fn same_seed_same_bits() {
        let m = GaussianMeanShift::new(0.5).unwrap();
        let mut cfg = McConfig::new(20.0, 500, 42);
        cfg.nu = 300;
        let a = estimate_stadd_multicyclic(&m, &cfg).unwrap();
        let b = estimate_stadd_multicyclic(&m, &cfg).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        let c = estimate_riadd_truncated(&m, &cfg, 10_000).unwrap();
        let d = estimate_riadd_truncated(&m, &cfg, 10_000).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn forced_stop_riadd_is_one() {
        let m = GaussianMeanShift::new(1.0).unwrap();
        let cfg = McConfig::new(1e-300, 200, 3);
        let est = estimate_riadd_truncated(&m, &cfg, 0).unwrap();
        assert_eq!(est.mean, 1.0);
        assert!(est.warnings.is_empty());
    }

    #[test]
    fn degenerate_change_at_zero_is_positive() {
        let m = GaussianMeanShift::new(1.0).unwrap();
        let cfg = McConfig::new(56.0, 2000, 9);
        let est = estimate_stadd_multicyclic(&m, &cfg).unwrap();
        assert!(est.mean > 0.0);
        assert!(est.warnings.iter().any(|w| w.contains("stationary")));
    }

    #[test]
    fn short_tail_warns() {
        let m = GaussianMeanShift::new(1.0).unwrap();
        let cfg = McConfig::new(56.0, 300, 4);
        let est = estimate_riadd_truncated(&m, &cfg, 5).unwrap();
        assert!(est.warnings.iter().any(|w| w.contains("k_max")));
    }
}
