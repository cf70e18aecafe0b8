//! Error quantification: Richardson rate estimates over doubling `N`, and
//! a priori bounds of the form `‖ℓ‖∞ ‖u''‖∞ h²/8`.
//!
//! Solutions on different Chebyshev partitions share no interior nodes, so
//! every comparison happens on a fixed evaluation grid of
//! [`COMMON_GRID_POINTS`] equispaced points, evaluated with the iterated
//! solution.

use serde::{Deserialize, Serialize};

use crate::collocation::{assemble, Discretization, Method};
use crate::error::{GsrError, Result};
use crate::model::LrModel;
use crate::solver::{solve_pair, sup, Component, SolutionPair};

pub const COMMON_GRID_POINTS: usize = 257;

/// Outcome of a three-level Richardson comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateEstimate {
    /// `c = -log2(‖u_2N − u_N‖/‖u_N − u_N/2‖)` and the error estimate
    /// `2^{-c} ‖u_N − u_N/2‖` for `u_N`.
    Rate { rate: f64, err_est: f64 },
    /// The two finer solutions agree exactly.
    Converged,
    /// The two coarser solutions agree exactly; no rate can be formed.
    Undefined,
}

impl RateEstimate {
    pub fn rate(&self) -> Option<f64> {
        match self {
            RateEstimate::Rate { rate, .. } => Some(*rate),
            _ => None,
        }
    }

    pub fn err_est(&self) -> Option<f64> {
        match self {
            RateEstimate::Rate { err_est, .. } => Some(*err_est),
            RateEstimate::Converged => Some(0.0),
            RateEstimate::Undefined => None,
        }
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Rate and error estimate from solutions at `N/2`, `N`, `2N` sampled on a
/// common grid.
pub fn richardson_rate(u_half: &[f64], u_one: &[f64], u_two: &[f64]) -> Result<RateEstimate> {
    if u_half.is_empty() || u_half.len() != u_one.len() || u_one.len() != u_two.len() {
        return Err(GsrError::InvalidArgument(format!(
            "samples must share a nonempty grid (got {}, {}, {})",
            u_half.len(),
            u_one.len(),
            u_two.len()
        )));
    }
    let den = sup_diff(u_one, u_half);
    let num = sup_diff(u_two, u_one);
    if num == 0.0 {
        return Ok(RateEstimate::Converged);
    }
    if den == 0.0 {
        return Ok(RateEstimate::Undefined);
    }
    let rate = -(num / den).log2();
    Ok(RateEstimate::Rate {
        rate,
        err_est: 2f64.powf(-rate) * den,
    })
}

/// `max |u''|` over interior nodes, by three-point divided differences on a
/// possibly nonuniform grid.
pub fn second_derivative_sup(nodes: &[f64], values: &[f64]) -> Result<f64> {
    if nodes.len() != values.len() {
        return Err(GsrError::InvalidArgument("nodes/values length mismatch".into()));
    }
    if nodes.len() < 3 {
        return Err(GsrError::InvalidArgument(
            "need at least 3 nodes to estimate a second derivative".into(),
        ));
    }
    Ok(nodes
        .windows(3)
        .zip(values.windows(3))
        .map(|(x, u)| {
            let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
            let d = 2.0 * ((u[2] - u[1]) / h1 - (u[1] - u[0]) / h0) / (h0 + h1);
            d.abs()
        })
        .fold(0.0, f64::max))
}

/// `‖ℓ‖∞ · ‖u''‖∞ · h²/8` for `u = ℓ` or `u = Ξ`.
///
/// `‖(I − K)⁻¹‖∞ = ‖ℓ‖∞` exactly, and `‖ℓ‖∞` is read off the computed nodal
/// values.
pub fn apriori_bound(s: &SolutionPair, which: Component) -> Result<f64> {
    let nodes = s.discretization().collocation();
    let u_xx = second_derivative_sup(nodes, s.nodal(which))?;
    let h = s.discretization().partition().h_max();
    Ok(sup(s.ell()) * u_xx * h * h / 8.0)
}

/// The tabulated quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Arl,
    Stadd,
}

impl std::str::FromStr for Quantity {
    type Err = GsrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "arl" => Ok(Quantity::Arl),
            "stadd" => Ok(Quantity::Stadd),
            other => Err(GsrError::InvalidArgument(format!("unknown quantity '{other}'"))),
        }
    }
}

/// `COMMON_GRID_POINTS` equispaced points on `[0, A]`.
pub fn common_grid(threshold: f64) -> Vec<f64> {
    let m = COMMON_GRID_POINTS - 1;
    let mut g: Vec<f64> = (0..=m).map(|k| threshold * k as f64 / m as f64).collect();
    g[m] = threshold;
    g
}

/// `quantity(x)` at each grid point via the iterated solution.
pub fn sample_quantity<M: LrModel>(
    model: &M,
    s: &SolutionPair,
    quantity: Quantity,
    grid: &[f64],
) -> Result<Vec<f64>> {
    grid.iter()
        .map(|&x| {
            let (ell, xi) = s.eval_both(model, x)?;
            Ok(match quantity {
                Quantity::Arl => ell,
                Quantity::Stadd => xi / (ell + x),
            })
        })
        .collect()
}

/// A priori bound on `quantity` at headstart `r`.
///
/// For the STADD the bounds `e_ℓ`, `e_Ξ` on `ℓ` and `Ξ` are propagated
/// through the ratio: `|S̃ − S| ≤ (e_Ξ + S̃ e_ℓ)/(ℓ̃(r) + r − e_ℓ)` whenever
/// the denominator is positive.
pub fn quantity_bound<M: LrModel>(
    model: &M,
    s: &SolutionPair,
    quantity: Quantity,
    r: f64,
) -> Result<Option<f64>> {
    let b_ell = apriori_bound(s, Component::Ell)?;
    match quantity {
        Quantity::Arl => Ok(Some(b_ell)),
        Quantity::Stadd => {
            let b_xi = apriori_bound(s, Component::Xi)?;
            let (ell, xi) = s.eval_both(model, r)?;
            let stadd = xi / (ell + r);
            let den = ell + r - b_ell;
            Ok((den > 0.0).then(|| (b_xi + stadd * b_ell) / den))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "reason")]
pub enum RowStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub method: Method,
    /// `None` when the solve failed.
    pub value: Option<f64>,
    pub rate: Option<f64>,
    pub err_est: Option<f64>,
    pub bound: Option<f64>,
    #[serde(flatten)]
    pub status: RowStatus,
}

impl ConvergenceRow {
    pub fn failed(&self) -> bool {
        matches!(self.status, RowStatus::Failed(_))
    }
}

/// Checks that `ns` is nonempty, starts at 2 or more, and doubles.
pub fn validate_doubling(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(GsrError::InvalidArgument("empty N list".into()));
    }
    if ns[0] < 2 {
        return Err(GsrError::InvalidArgument(format!("N must be at least 2, got {}", ns[0])));
    }
    if let Some(w) = ns.windows(2).find(|w| w[1] != 2 * w[0]) {
        return Err(GsrError::InvalidArgument(format!(
            "N list must double at every step ({} -> {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

struct Level {
    value: f64,
    samples: Vec<f64>,
    bound: Option<f64>,
}

fn solve_level<M: LrModel>(
    model: &M,
    method: Method,
    threshold: f64,
    r: f64,
    n: usize,
    quantity: Quantity,
    grid: &[f64],
) -> Result<Level> {
    let k = assemble(model, Discretization::new(method, threshold, n)?)?;
    let s = solve_pair(&k)?;
    let samples = sample_quantity(model, &s, quantity, grid)?;
    let value = sample_quantity(model, &s, quantity, &[r])?[0];
    if !value.is_finite() || samples.iter().any(|v| !v.is_finite()) {
        return Err(GsrError::NumericalFailure {
            norm: s.kernel_norm(),
            reason: "non-finite solution values".into(),
        });
    }
    // The a priori bound is derived for the hat scheme only.
    let bound = if method == Method::Hat && s.discretization().size() >= 3 {
        quantity_bound(model, &s, quantity, r)?
    } else {
        None
    };
    Ok(Level {
        value,
        samples,
        bound,
    })
}

/// One row per `N` with the value at headstart `r`, the Richardson rate
/// (interior rows only), the error estimate and the a priori bound.
///
/// A numerical failure at some `N` (a singular midpoint system, say) yields a
/// row with status `Failed` and no value; rates next to it are left empty.
pub fn convergence_table<M: LrModel>(
    model: &M,
    threshold: f64,
    r: f64,
    ns: &[usize],
    method: Method,
    quantity: Quantity,
) -> Result<Vec<ConvergenceRow>> {
    validate_doubling(ns)?;
    if !(r >= 0.0 && r <= threshold) {
        return Err(GsrError::Domain(format!("headstart r = {r} outside [0, {threshold}]")));
    }
    let grid = common_grid(threshold);
    let mut levels = Vec::with_capacity(ns.len());
    for &n in ns {
        levels.push(match solve_level(model, method, threshold, r, n, quantity, &grid) {
            Ok(level) => Ok(level),
            Err(e @ GsrError::NumericalFailure { .. }) => Err(e.to_string()),
            Err(e) => return Err(e),
        });
    }
    let mut rows = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        let row = match &levels[i] {
            Err(reason) => ConvergenceRow {
                n,
                method,
                value: None,
                rate: None,
                err_est: None,
                bound: None,
                status: RowStatus::Failed(reason.clone()),
            },
            Ok(level) => {
                let neighbours = (i > 0 && i + 1 < ns.len())
                    .then(|| (&levels[i - 1], &levels[i + 1]));
                let estimate = match neighbours {
                    Some((Ok(lo), Ok(hi))) => {
                        Some(richardson_rate(&lo.samples, &level.samples, &hi.samples)?)
                    }
                    _ => None,
                };
                ConvergenceRow {
                    n,
                    method,
                    value: Some(level.value),
                    rate: estimate.and_then(|e| e.rate()),
                    err_est: estimate.and_then(|e| e.err_est()),
                    bound: level.bound,
                    status: RowStatus::Ok,
                }
            }
        };
        rows.push(row);
    }
    Ok(rows)
}
