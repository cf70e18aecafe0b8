//! Performance measures built from solved systems.
//!
//! The production path reads the ARL and STADD straight off a
//! [`SolutionPair`]: `ARL(r) = ℓ(r)` and `STADD(r) = Ξ(r)/(ℓ(r) + r)`.
//! [`VerificationPath`] recomputes the STADD numerator the long way, from the
//! post-change delay `δ₀` and the integral delay `ψ`, so the identity
//! `Ξ = ψ + x δ₀` can be checked numerically.

use serde::{Deserialize, Serialize};

use crate::collocation::{assemble, Discretization, KernelMatrix, Method};
use crate::error::{GsrError, Result};
use crate::model::LrModel;
use crate::solver::{solve_pair, sup, Factored, SolutionPair};

/// Default cap on the length of the `δ_k` sequence.
pub const DEFAULT_K_MAX: usize = 200;
/// `δ_k` iteration stops once `‖δ_k‖∞` drops below this.
pub const DELTA_K_FLOOR: f64 = 1e-12;

/// Numerical diagnostics attached to a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub kernel_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub arl_err_est: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stadd_err_est: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub arl_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stadd_bound: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub model: String,
    pub threshold: f64,
    pub headstart: f64,
    pub n: usize,
    pub method: Method,
    pub arl: f64,
    pub stadd: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iadd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostics: Option<Diagnostics>,
}

impl PerformanceReport {
    /// `(r δ₀ + IADD)/(ARL + r)` from the optional fields, when present.
    pub fn generalized_stadd(&self) -> Option<f64> {
        let (d0, iadd) = (self.delta0?, self.iadd?);
        Some((self.headstart * d0 + iadd) / (self.arl + self.headstart))
    }
}

/// `ℓ(x)`: ARL to false alarm from headstart `x`.
pub fn arl_at<M: LrModel>(model: &M, s: &SolutionPair, x: f64) -> Result<f64> {
    Ok(s.eval_both(model, x)?.0)
}

/// `Ξ(x)/(ℓ(x) + x)`: stationary average detection delay from headstart `x`.
pub fn stadd_at<M: LrModel>(model: &M, s: &SolutionPair, x: f64) -> Result<f64> {
    let (ell, xi) = s.eval_both(model, x)?;
    Ok(xi / (ell + x))
}

/// The post-change operator obtained from `(1+x) K₀(x,y) = y K∞(x,y)`:
/// `K₀_ij = K_ij · z_j / (1 + z_i)`. It reuses the `K∞` entries and needs no
/// cdf evaluations of its own.
pub fn change_of_measure_matrix(k: &KernelMatrix) -> KernelMatrix {
    let z = k.discretization().collocation();
    let n = z.len();
    let entries: Vec<f64> = k
        .entries()
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            let (i, j) = (idx / n, idx % n);
            v * z[j] / (1.0 + z[i])
        })
        .collect();
    KernelMatrix::from_entries(k.discretization().clone(), entries, k.model_descriptor().into())
        .expect("same shape")
}

/// Solves `(I − K₀) δ₀ = 1` at the collocation nodes.
pub fn solve_delta0(k: &KernelMatrix) -> Result<Vec<f64>> {
    let k0 = change_of_measure_matrix(k);
    let f = Factored::new(&k0)?;
    let mut sol = f.solve(&[vec![1.0; k.size()]])?;
    Ok(sol.pop().expect("one solution"))
}

/// Solves `(I − K∞) ψ = δ₀`.
pub fn solve_iadd(k: &KernelMatrix, delta0: &[f64]) -> Result<Vec<f64>> {
    if delta0.len() != k.size() {
        return Err(GsrError::InvalidArgument(format!(
            "delta0 has {} entries, matrix has {}",
            delta0.len(),
            k.size()
        )));
    }
    let f = Factored::new(k)?;
    let mut sol = f.solve(&[delta0.to_vec()])?;
    Ok(sol.pop().expect("one solution"))
}

/// `δ_0, δ_1 = K δ_0, δ_2 = K δ_1, ...` up to `k_max`, stopping early once
/// `‖δ_k‖∞ < 1e-12`.
pub fn add_k_sequence(k: &KernelMatrix, delta0: &[f64], k_max: usize) -> Vec<Vec<f64>> {
    let mut seq = vec![delta0.to_vec()];
    while seq.len() <= k_max {
        let last = seq.last().expect("nonempty");
        if sup(last) < DELTA_K_FLOOR {
            break;
        }
        let next = k.apply(last);
        seq.push(next);
    }
    seq
}

/// `δ₀` and `ψ` at the nodes, with iterated evaluation off the nodes.
#[derive(Debug, Clone)]
pub struct VerificationPath {
    disc: Discretization,
    pub delta0: Vec<f64>,
    pub psi: Vec<f64>,
}

impl VerificationPath {
    pub fn solve(k: &KernelMatrix) -> Result<Self> {
        let delta0 = solve_delta0(k)?;
        let psi = solve_iadd(k, &delta0)?;
        Ok(Self {
            disc: k.discretization().clone(),
            delta0,
            psi,
        })
    }

    /// `ψ_j + z_j δ₀_j`, to be compared with the directly solved `Ξ`.
    pub fn xi_nodes(&self) -> Vec<f64> {
        self.psi
            .iter()
            .zip(&self.delta0)
            .zip(self.disc.collocation())
            .map(|((p, d), z)| p + z * d)
            .collect()
    }

    /// `(δ̃₀(x), ψ̃(x))`.
    pub fn eval<M: LrModel>(&self, model: &M, x: f64) -> Result<(f64, f64)> {
        let a = self.disc.threshold();
        if !(0.0..=a).contains(&x) {
            return Err(GsrError::Domain(format!("x = {x} outside [0, {a}]")));
        }
        let z = self.disc.collocation();
        let k = z.partition_point(|&v| v < x);
        if k < z.len() && z[k] == x {
            return Ok((self.delta0[k], self.psi[k]));
        }
        let row = self.disc.operator_row(model, x)?;
        let weighted: f64 = row
            .iter()
            .zip(z)
            .zip(&self.delta0)
            .map(|((r, zj), d)| r * zj * d)
            .sum();
        let d0 = 1.0 + weighted / (1.0 + x);
        let psi = d0 + row.iter().zip(&self.psi).map(|(r, p)| r * p).sum::<f64>();
        Ok((d0, psi))
    }
}

/// Options for [`evaluate`].
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    /// Also run the `δ₀`/`ψ` pathway and fill `delta0`/`iadd`.
    pub verify: bool,
}

/// Builds the discretization, solves, and reports ARL and STADD at `headstart`.
pub fn evaluate<M: LrModel>(
    model: &M,
    method: Method,
    threshold: f64,
    headstart: f64,
    n: usize,
    opts: EvalOptions,
) -> Result<(SolutionPair, PerformanceReport)> {
    if !(headstart >= 0.0 && headstart <= threshold) {
        return Err(GsrError::Domain(format!(
            "headstart r = {headstart} outside [0, {threshold}]"
        )));
    }
    let k = assemble(model, Discretization::new(method, threshold, n)?)?;
    let s = solve_pair(&k)?;
    let (ell, xi) = s.eval_both(model, headstart)?;
    let (delta0, iadd) = if opts.verify {
        let v = VerificationPath::solve(&k)?;
        let (d0, psi) = v.eval(model, headstart)?;
        (Some(d0), Some(psi))
    } else {
        (None, None)
    };
    let report = PerformanceReport {
        model: model.describe(),
        threshold,
        headstart,
        n,
        method,
        arl: ell,
        stadd: xi / (ell + headstart),
        delta0,
        iadd,
        diagnostics: Some(Diagnostics {
            kernel_norm: s.kernel_norm(),
            ..Default::default()
        }),
    };
    Ok((s, report))
}
