//! Threshold calibration: find `A` with `ℓ(r; A) = γ`.
//!
//! `ℓ(r; A)` is increasing in `A`, and the martingale property of
//! `R_n − n − r` gives `ℓ(r; A) ≥ A − r`, so `A = γ + r` always overshoots the
//! target. The root is found by bisection until the bracket has shrunk by a
//! factor of 8, then by safeguarded secant steps. The partition size stays
//! fixed throughout; only the threshold (and hence the node layout) moves.

use crate::accuracy::{common_grid, richardson_rate, sample_quantity, Quantity};
use crate::collocation::{assemble, Discretization, Method};
use crate::error::{GsrError, Result};
use crate::metrics::{Diagnostics, PerformanceReport};
use crate::model::LrModel;
use crate::solver::{solve_pair, SolutionPair};

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSpec {
    /// Target ARL to false alarm, `> 1`.
    pub gamma: f64,
    /// Headstart `r ≥ 0`.
    pub headstart: f64,
    pub n: usize,
    pub method: Method,
    /// Relative tolerance on the achieved ARL.
    pub rel_tol: f64,
    pub max_iters: usize,
    /// Optional limiting overshoot `ξ ∈ (0, 1)`; only used to seed the first
    /// secant step at `A ≈ ξ (γ + r)`.
    pub overshoot: Option<f64>,
}

impl CalibrationSpec {
    pub fn new(gamma: f64, n: usize) -> Self {
        Self {
            gamma,
            headstart: 0.0,
            n,
            method: Method::Hat,
            rel_tol: 1e-4,
            max_iters: 60,
            overshoot: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return Err(GsrError::InvalidArgument(format!(
                "target ARL gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        if !(self.headstart.is_finite() && self.headstart >= 0.0) {
            return Err(GsrError::InvalidArgument(format!(
                "headstart must be nonnegative, got {}",
                self.headstart
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(GsrError::InvalidArgument(format!(
                "rel_tol must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if let Some(xi) = self.overshoot {
            if !(xi > 0.0 && xi < 1.0) {
                return Err(GsrError::InvalidArgument(format!(
                    "overshoot must lie in (0, 1), got {xi}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub threshold: f64,
    pub report: PerformanceReport,
    /// Every `(A, ℓ(r; A))` evaluated, in order.
    pub history: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

struct Evaluator<'m, M> {
    model: &'m M,
    spec: &'m CalibrationSpec,
    history: Vec<(f64, f64)>,
}

impl<M: LrModel> Evaluator<'_, M> {
    fn solve(&self, threshold: f64, n: usize) -> Result<SolutionPair> {
        let k = assemble(self.model, Discretization::new(self.spec.method, threshold, n)?)?;
        solve_pair(&k)
    }

    fn arl(&mut self, threshold: f64) -> Result<f64> {
        let s = self.solve(threshold, self.spec.n)?;
        let (ell, _) = s.eval_both(self.model, self.spec.headstart)?;
        self.history.push((threshold, ell));
        Ok(ell)
    }
}

/// Finds `A` with `|ℓ(r; A)/γ − 1| ≤ rel_tol`.
pub fn calibrate<M: LrModel>(model: &M, spec: &CalibrationSpec) -> Result<Calibration> {
    spec.validate()?;
    let (gamma, r) = (spec.gamma, spec.headstart);
    let mut ev = Evaluator {
        model,
        spec,
        history: Vec::new(),
    };
    let mut warnings = Vec::new();
    let f = |arl: f64| arl / gamma - 1.0;

    let mut hi = gamma + r;
    let mut arl_hi = ev.arl(hi)?;
    let mut lo = r.max(1.0).min(hi);
    let mut arl_lo = ev.arl(lo)?;
    if arl_hi < gamma {
        return Err(GsrError::BracketFailure {
            lo,
            hi,
            arl_lo,
            arl_hi,
            gamma,
        });
    }
    // Small γ: pull the lower end toward r until it undershoots.
    while arl_lo >= gamma && lo - r > 1e-12 * hi {
        lo = r + 0.5 * (lo - r);
        arl_lo = ev.arl(lo)?;
    }
    if arl_lo >= gamma {
        return Err(GsrError::BracketFailure {
            lo,
            hi,
            arl_lo,
            arl_hi,
            gamma,
        });
    }

    let initial_width = hi - lo;
    // The two most recent evaluations, oldest first.
    let mut recent = [(lo, arl_lo), (hi, arl_hi)];
    let mut seed = spec.overshoot.map(|xi| xi * (gamma + r));
    for _ in 0..spec.max_iters {
        let bisect = 0.5 * (lo + hi);
        let candidate = if let Some(a0) = seed.take() {
            a0
        } else if hi - lo > initial_width / 8.0 {
            bisect
        } else {
            let [(a0, l0), (a1, l1)] = recent;
            a1 - f(l1) * (a1 - a0) / (f(l1) - f(l0))
        };
        let a = if candidate > lo && candidate < hi && candidate.is_finite() {
            candidate
        } else {
            bisect
        };
        let arl = ev.arl(a)?;
        if !(arl >= arl_lo && arl <= arl_hi) {
            warnings.push(format!(
                "non-monotone ARL: ARL({a}) = {arl} outside [{arl_lo}, {arl_hi}]"
            ));
        }
        if f(arl).abs() <= spec.rel_tol {
            return finish(model, spec, &mut ev, a, warnings);
        }
        if arl < gamma {
            lo = a;
            arl_lo = arl;
        } else {
            hi = a;
            arl_hi = arl;
        }
        recent = [recent[1], (a, arl)];
    }
    let (threshold, arl) = *ev.history.last().expect("evaluated at least once");
    Err(GsrError::NoConvergence {
        iterations: spec.max_iters,
        threshold,
        arl,
    })
}

/// Full report at the calibrated threshold, with a Richardson estimate of the
/// ARL error built from `N/4`, `N/2`, `N`.
fn finish<M: LrModel>(
    model: &M,
    spec: &CalibrationSpec,
    ev: &mut Evaluator<'_, M>,
    threshold: f64,
    mut warnings: Vec<String>,
) -> Result<Calibration> {
    let r = spec.headstart;
    let s = ev.solve(threshold, spec.n)?;
    let (ell, xi) = s.eval_both(model, r)?;
    let mut diag = Diagnostics {
        kernel_norm: s.kernel_norm(),
        ..Default::default()
    };
    if spec.n >= 8 {
        let grid = common_grid(threshold);
        let fine = sample_quantity(model, &s, Quantity::Arl, &grid)?;
        let half = sample_quantity(model, &ev.solve(threshold, spec.n / 2)?, Quantity::Arl, &grid)?;
        let quarter =
            sample_quantity(model, &ev.solve(threshold, spec.n / 4)?, Quantity::Arl, &grid)?;
        let est = richardson_rate(&quarter, &half, &fine)?;
        diag.rate = est.rate();
        // Error of the finest level: 2^{-c} ‖u_N − u_{N/2}‖.
        diag.arl_err_est = match est.rate() {
            Some(c) => {
                let d = fine.iter().zip(&half).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                Some(2f64.powf(-c) * d)
            }
            None => est.err_est(),
        };
        if let Some(e) = diag.arl_err_est {
            if e > spec.rel_tol * spec.gamma {
                warnings.push(format!(
                    "estimated ARL discretization error {e:.3e} exceeds rel_tol * gamma = {:.3e}; increase N",
                    spec.rel_tol * spec.gamma
                ));
            }
        }
    } else {
        warnings.push("N < 8: no Richardson error estimate".into());
    }
    diag.warnings = warnings.clone();
    let report = PerformanceReport {
        model: model.describe(),
        threshold,
        headstart: r,
        n: spec.n,
        method: spec.method,
        arl: ell,
        stadd: xi / (ell + r),
        delta0: None,
        iadd: None,
        diagnostics: Some(diag),
    };
    Ok(Calibration {
        threshold,
        report,
        history: std::mem::take(&mut ev.history),
        warnings,
    })
}
