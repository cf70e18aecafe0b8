//! Discretization of the integral operator `(K u)(x) = ∫_0^A K∞(x,y) u(y) dy`.
//!
//! Two schemes are provided:
//!
//! * [`Method::Hat`]: piecewise-linear hat basis on a shifted Chebyshev
//!   partition with `N` nodes, collocated at the nodes. Every entry
//!   `∫ K∞(z_i,y) φ_j(y) dy` is evaluated in closed form: the linear part of
//!   the hat is absorbed by `y K∞(x,y) = (1+x) K₀(x,y)`, so an entry is a
//!   combination of `P₀` and `P∞` differences. No quadrature is involved.
//! * [`Method::Midpoint`]: the Markov-chain approximation, piecewise
//!   constants on `N` equal cells (`N+1` uniform nodes) collocated at the cell
//!   midpoints, with entries `P∞(x_{j+1}/(1+z_i)) − P∞(x_j/(1+z_i))`.
//!
//! Matrices are dense and row-major. At `N = 8192` one matrix takes 512 MiB,
//! which is the intended ceiling.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GsrError, Result};
use crate::grid::Partition;
use crate::model::LrModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Hat basis with exact entries.
    Hat,
    /// Product midpoint rule (Markov-chain approach).
    Midpoint,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Hat => f.write_str("hat"),
            Method::Midpoint => f.write_str("midpoint"),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = GsrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hat" => Ok(Method::Hat),
            "midpoint" | "mid" => Ok(Method::Midpoint),
            other => Err(GsrError::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// A partition together with the collocation nodes a method uses on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    method: Method,
    partition: Partition,
    collocation: Vec<f64>,
}

impl Discretization {
    /// Hat method with `n` Chebyshev nodes; collocation nodes are the nodes.
    pub fn hat(threshold: f64, n: usize) -> Result<Self> {
        Ok(Self::from_hat_partition(Partition::chebyshev(threshold, n)?))
    }

    /// Midpoint method with `n` uniform cells (`n + 1` nodes).
    pub fn midpoint(threshold: f64, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(GsrError::InvalidArgument(
                "midpoint method needs at least one cell".into(),
            ));
        }
        Ok(Self::from_midpoint_partition(Partition::uniform(threshold, n + 1)?))
    }

    pub fn new(method: Method, threshold: f64, n: usize) -> Result<Self> {
        match method {
            Method::Hat => Self::hat(threshold, n),
            Method::Midpoint => Self::midpoint(threshold, n),
        }
    }

    pub fn from_hat_partition(partition: Partition) -> Self {
        let collocation = partition.nodes().to_vec();
        Self {
            method: Method::Hat,
            partition,
            collocation,
        }
    }

    /// Any partition with `N + 1` nodes; collocation at the `N` cell midpoints.
    pub fn from_midpoint_partition(partition: Partition) -> Self {
        let collocation = partition.midpoints();
        Self {
            method: Method::Midpoint,
            partition,
            collocation,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn threshold(&self) -> f64 {
        self.partition.threshold()
    }

    /// Collocation nodes `z_1..z_N`.
    pub fn collocation(&self) -> &[f64] {
        &self.collocation
    }

    /// Number of unknowns `N`.
    pub fn size(&self) -> usize {
        self.collocation.len()
    }

    /// `[∫_0^A K∞(x,y) φ_j(y) dy]_j`, the operator row at an arbitrary `x ≥ 0`.
    ///
    /// Assembly calls this at each collocation node; the iterated solution
    /// calls it at off-node points.
    pub fn operator_row<M: LrModel>(&self, model: &M, x: f64) -> Result<Vec<f64>> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(GsrError::Domain(format!("row point x = {x} must be nonnegative")));
        }
        match self.method {
            Method::Hat => hat_row(model, &self.partition, x),
            Method::Midpoint => midpoint_row(model, &self.partition, x),
        }
    }
}

fn hat_row<M: LrModel>(model: &M, p: &Partition, x: f64) -> Result<Vec<f64>> {
    let s = 1.0 + x;
    let xs = p.nodes();
    let hs = p.widths();
    let n = xs.len();
    // One cdf argument per node, shared by the P∞ and P₀ evaluations.
    let mut p_inf = Vec::with_capacity(n);
    let mut p_0 = Vec::with_capacity(n);
    for &xk in xs {
        let (a, b) = model.cdf_pair(xk / s)?;
        p_inf.push(a);
        p_0.push(b);
    }
    let mut row = vec![0.0; n];
    for k in 0..n - 1 {
        let d_inf = (p_inf[k + 1] - p_inf[k]).max(0.0);
        let d_0 = p_0[k + 1] - p_0[k];
        // Rising ramp of φ_{k+1} on [x_k, x_{k+1}]: ∫ (y - x_k)/h K∞ dy.
        // Cancellation can push it a few ulps outside [0, d_inf]; the falling
        // ramp of φ_k takes the remainder of the cell mass.
        let rise = ((s * d_0 - xs[k] * d_inf) / hs[k]).clamp(0.0, d_inf);
        row[k + 1] += rise;
        row[k] += d_inf - rise;
    }
    Ok(row)
}

fn midpoint_row<M: LrModel>(model: &M, p: &Partition, x: f64) -> Result<Vec<f64>> {
    let s = 1.0 + x;
    let cdf: Vec<f64> = p
        .nodes()
        .iter()
        .map(|&xk| model.cdf_lr_inf(xk / s))
        .collect::<Result<_>>()?;
    Ok(cdf.windows(2).map(|w| w[1] - w[0]).collect())
}

/// The `N × N` matrix `K_{ij} = ∫ K∞(z_i, y) φ_j(y) dy`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    disc: Discretization,
    entries: Vec<f64>,
    model: String,
}

impl KernelMatrix {
    /// Builds a matrix from explicit row-major entries. Mostly useful for
    /// tests and for derived operators.
    pub fn from_entries(disc: Discretization, entries: Vec<f64>, model: String) -> Result<Self> {
        let n = disc.size();
        if entries.len() != n * n {
            return Err(GsrError::InvalidArgument(format!(
                "expected {} entries for N = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(Self {
            disc,
            entries,
            model,
        })
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn method(&self) -> Method {
        self.disc.method
    }

    pub fn size(&self) -> usize {
        self.disc.size()
    }

    pub fn model_descriptor(&self) -> &str {
        &self.model
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.size();
        &self.entries[i * n..(i + 1) * n]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.size()).map(|i| self.row(i).iter().sum()).collect()
    }

    /// `max_i Σ_j |K_ij|` without the contraction check.
    pub fn sup_norm(&self) -> f64 {
        (0..self.size())
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `K u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.size())
            .map(|i| self.row(i).iter().zip(u).map(|(k, v)| k * v).sum())
            .collect()
    }
}

/// Hat-basis matrix on a Chebyshev (or any) partition; collocation at nodes.
pub fn assemble_hat<M: LrModel>(model: &M, partition: &Partition) -> Result<KernelMatrix> {
    assemble(model, Discretization::from_hat_partition(partition.clone()))
}

/// Midpoint-rule matrix on a partition with `N + 1` nodes.
pub fn assemble_midpoint<M: LrModel>(model: &M, partition: &Partition) -> Result<KernelMatrix> {
    assemble(model, Discretization::from_midpoint_partition(partition.clone()))
}

/// Assembles the matrix for any discretization, one row per collocation node.
///
/// Rows are independent of each other, so the result does not depend on the
/// order in which they are produced.
pub fn assemble<M: LrModel>(model: &M, disc: Discretization) -> Result<KernelMatrix> {
    let n = disc.size();
    let mut entries = Vec::with_capacity(n * n);
    for &z in disc.collocation() {
        entries.extend(disc.operator_row(model, z)?);
    }
    Ok(KernelMatrix {
        disc,
        entries,
        model: model.describe(),
    })
}

/// `‖K‖∞`; fails when the discrete operator is not a strict contraction.
///
/// In floating point a row sum `P∞(A/(1+z_i))` can round to exactly 1 for
/// very faint changes even though the true value is below 1. The solver
/// does not gate on this check for that reason; see
/// [`crate::solver::solve_pair`].
pub fn operator_norm(m: &KernelMatrix) -> Result<f64> {
    let norm = m.sup_norm();
    if norm < 1.0 {
        Ok(norm)
    } else {
        Err(GsrError::NotContractive { norm })
    }
}
