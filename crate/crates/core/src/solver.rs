//! Solution of `(I − K) u = v` for the ARL (`v = 1`) and the STADD numerator
//! (`v = 1 + x`). Both right-hand sides share one dense LU factorization
//! with partial pivoting.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

use crate::collocation::{Discretization, KernelMatrix};
use crate::error::{GsrError, Result};
use crate::model::LrModel;

/// Normwise backward error every solve must meet:
/// `‖(I−K)u − v‖∞ < tol · (‖I−K‖∞ ‖u‖∞ + ‖v‖∞)`.
///
/// For well-conditioned systems this is the plain relative residual; for
/// large ARLs (`‖u‖∞ ≈ 10⁵`) the residual itself cannot be evaluated more
/// accurately than `ε ‖I−K‖ ‖u‖`, so the scale has to include `‖u‖`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Which of the two solved functions to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// `ℓ(x)`, the ARL to false alarm from headstart `x`.
    Ell,
    /// `Ξ(x) = ψ(x) + x δ₀(x)`, the STADD numerator.
    Xi,
}

/// A factorized `I − K`, reusable for any number of right-hand sides.
pub struct Factored<'a> {
    op: &'a KernelMatrix,
    lu: PartialPivLu<f64>,
    norm: f64,
    /// `‖I − K‖∞`.
    scale: f64,
}

impl<'a> Factored<'a> {
    pub fn new(op: &'a KernelMatrix) -> Result<Self> {
        let n = op.size();
        let norm = op.sup_norm();
        let entries = op.entries();
        let a = Mat::<f64>::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            delta - entries[i * n + j]
        });
        let lu = a.partial_piv_lu();
        let u = lu.U();
        for k in 0..n {
            let pivot = u[(k, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(GsrError::NumericalFailure {
                    norm,
                    reason: format!("singular factorization (pivot {k} is {pivot})"),
                });
            }
        }
        let scale = (0..n)
            .map(|i| {
                let row = &entries[i * n..(i + 1) * n];
                row.iter().map(|k| k.abs()).sum::<f64>() - row[i].abs() + (1.0 - row[i]).abs()
            })
            .fold(0.0, f64::max);
        Ok(Self { op, lu, norm, scale })
    }

    pub fn operator_norm(&self) -> f64 {
        self.norm
    }

    fn backward_error(&self, r: &[f64], v: &[f64], u: &[f64]) -> f64 {
        if u.iter().any(|x| !x.is_finite()) {
            return f64::INFINITY;
        }
        sup(r) / (self.scale * sup(u) + sup(v))
    }

    fn raw_solve(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.op.size();
        let mut b = Mat::<f64>::from_fn(n, rhs.len(), |i, c| rhs[c][i]);
        self.lu.solve_in_place(b.as_mut());
        (0..rhs.len())
            .map(|c| (0..n).map(|i| b[(i, c)]).collect())
            .collect()
    }

    /// `v − (I − K) u`.
    fn residual(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let ku = self.op.apply(u);
        v.iter()
            .zip(u)
            .zip(&ku)
            .map(|((vi, ui), kui)| vi - (ui - kui))
            .collect()
    }

    /// Solves every right-hand side and enforces the residual bound, with one
    /// step of residual-based refinement if the first pass misses it.
    pub fn solve(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let mut sols = self.raw_solve(rhs);
        let failing = |sols: &[Vec<f64>]| -> Vec<(usize, f64)> {
            sols.iter()
                .zip(rhs)
                .enumerate()
                .filter_map(|(c, (u, v))| {
                    let rel = self.backward_error(&self.residual(u, v), v, u);
                    (rel.is_nan() || rel >= RESIDUAL_TOL).then_some((c, rel))
                })
                .collect()
        };
        let bad = failing(&sols);
        if bad.is_empty() {
            return Ok(sols);
        }
        let corrections: Vec<Vec<f64>> = bad
            .iter()
            .map(|&(c, _)| self.residual(&sols[c], &rhs[c]))
            .collect();
        let deltas = self.raw_solve(&corrections);
        for (&(c, _), d) in bad.iter().zip(deltas) {
            for (u, du) in sols[c].iter_mut().zip(d) {
                *u += du;
            }
        }
        match failing(&sols).first() {
            None => Ok(sols),
            Some(&(c, rel)) => Err(GsrError::NumericalFailure {
                norm: self.norm,
                reason: format!(
                    "backward error {rel:e} for right-hand side {c} exceeds {RESIDUAL_TOL:e}"
                ),
            }),
        }
    }
}


pub(crate) fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Nodal values of `ℓ` and `Ξ` on one discretization.
#[derive(Debug, Clone)]
pub struct SolutionPair {
    disc: Discretization,
    ell: Vec<f64>,
    xi: Vec<f64>,
    kernel_norm: f64,
    model: String,
}

impl SolutionPair {
    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn threshold(&self) -> f64 {
        self.disc.threshold()
    }

    pub fn ell(&self) -> &[f64] {
        &self.ell
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn nodal(&self, which: Component) -> &[f64] {
        match which {
            Component::Ell => &self.ell,
            Component::Xi => &self.xi,
        }
    }

    /// `‖K‖∞` of the matrix this pair was solved from.
    pub fn kernel_norm(&self) -> f64 {
        self.kernel_norm
    }

    pub fn model_descriptor(&self) -> &str {
        &self.model
    }

    fn check_point(&self, x: f64) -> Result<()> {
        let a = self.threshold();
        if (0.0..=a).contains(&x) {
            Ok(())
        } else {
            Err(GsrError::Domain(format!("x = {x} outside [0, {a}]")))
        }
    }

    fn node_index(&self, x: f64) -> Option<usize> {
        let z = self.disc.collocation();
        let k = z.partition_point(|&v| v < x);
        (k < z.len() && z[k] == x).then_some(k)
    }

    /// `(ℓ̃(x), Ξ̃(x))` from one operator row.
    pub fn eval_both<M: LrModel>(&self, model: &M, x: f64) -> Result<(f64, f64)> {
        self.check_point(x)?;
        if let Some(k) = self.node_index(x) {
            return Ok((self.ell[k], self.xi[k]));
        }
        let row = self.disc.operator_row(model, x)?;
        let dot = |u: &[f64]| row.iter().zip(u).map(|(k, v)| k * v).sum::<f64>();
        Ok((1.0 + dot(&self.ell), 1.0 + x + dot(&self.xi)))
    }
}

/// Solves `(I−K) ℓ = 1` and `(I−K) Ξ = 1 + z` with a single factorization.
///
/// The contraction check of [`crate::collocation::operator_norm`] is not a
/// precondition here: for faint changes a row sum can round to 1 while the
/// system is still perfectly solvable. Genuine singularity shows up as a
/// zero pivot and is reported as [`GsrError::NumericalFailure`].
pub fn solve_pair(m: &KernelMatrix) -> Result<SolutionPair> {
    let factored = Factored::new(m)?;
    let z = m.discretization().collocation();
    let ones = vec![1.0; z.len()];
    let shifted: Vec<f64> = z.iter().map(|x| 1.0 + x).collect();
    let mut sols = factored.solve(&[ones, shifted])?;
    let xi = sols.pop().expect("two solutions");
    let ell = sols.pop().expect("two solutions");
    Ok(SolutionPair {
        disc: m.discretization().clone(),
        ell,
        xi,
        kernel_norm: factored.operator_norm(),
        model: m.model_descriptor().to_string(),
    })
}

/// The iterated projection solution `ũ(x) = v(x) + Σ_j u_j ∫ K∞(x,y) φ_j(y) dy`.
///
/// Equals the nodal value exactly at a collocation node.
pub fn iterated_eval<M: LrModel>(
    model: &M,
    s: &SolutionPair,
    which: Component,
    x: f64,
) -> Result<f64> {
    let (ell, xi) = s.eval_both(model, x)?;
    Ok(match which {
        Component::Ell => ell,
        Component::Xi => xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::{assemble, assemble_hat, Discretization};
    use crate::grid::Partition;
    use crate::model::GaussianMeanShift;

    #[test]
    fn zero_kernel_gives_rhs() {
        let disc = Discretization::hat(4.0, 5).unwrap();
        let k = KernelMatrix::from_entries(disc.clone(), vec![0.0; 25], "zero".into()).unwrap();
        let s = solve_pair(&k).unwrap();
        assert!(s.ell().iter().all(|&v| v == 1.0));
        for (xi, z) in s.xi().iter().zip(disc.collocation()) {
            assert_eq!(*xi, 1.0 + z);
        }
    }

    #[test]
    fn two_by_two_by_hand() {
        let m = GaussianMeanShift::new(1.0).unwrap();
        let k = assemble_hat(&m, &Partition::chebyshev(1.0, 2).unwrap()).unwrap();
        let s = solve_pair(&k).unwrap();
        // Cramer's rule on [[1-a, -b], [-c, 1-d]].
        let (a, b, c, d) = (k.get(0, 0), k.get(0, 1), k.get(1, 0), k.get(1, 1));
        let det = (1.0 - a) * (1.0 - d) - b * c;
        let solve = |v0: f64, v1: f64| {
            (
                (v0 * (1.0 - d) + b * v1) / det,
                ((1.0 - a) * v1 + c * v0) / det,
            )
        };
        let (l0, l1) = solve(1.0, 1.0);
        let (x0, x1) = solve(1.0, 2.0);
        assert!((s.ell()[0] - l0).abs() < 1e-12);
        assert!((s.ell()[1] - l1).abs() < 1e-12);
        assert!((s.xi()[0] - x0).abs() < 1e-12);
        assert!((s.xi()[1] - x1).abs() < 1e-12);
    }

    #[test]
    fn iterated_eval_matches_nodes_and_zero_kernel() {
        let m = GaussianMeanShift::new(1.0).unwrap();
        let k = assemble(&m, Discretization::hat(56.0, 64).unwrap()).unwrap();
        let s = solve_pair(&k).unwrap();
        for (j, &z) in k.discretization().collocation().iter().enumerate() {
            assert_eq!(iterated_eval(&m, &s, Component::Ell, z).unwrap(), s.ell()[j]);
            assert_eq!(iterated_eval(&m, &s, Component::Xi, z).unwrap(), s.xi()[j]);
        }
        assert!(iterated_eval(&m, &s, Component::Ell, 56.5).is_err());
        assert!(iterated_eval(&m, &s, Component::Ell, -0.5).is_err());

        // Tiny threshold: K is numerically zero, so ũ(x) = v(x).
        let tiny = assemble(&m, Discretization::hat(1e-30, 4).unwrap()).unwrap();
        let s = solve_pair(&tiny).unwrap();
        let x = 0.3e-30;
        assert!((iterated_eval(&m, &s, Component::Ell, x).unwrap() - 1.0).abs() < 1e-12);
        assert!((iterated_eval(&m, &s, Component::Xi, x).unwrap() - (1.0 + x)).abs() < 1e-12);
    }

    #[test]
    fn midpoint_singularity_is_reported() {
        // Faint change on a coarse grid: a row of K is a unit vector.
        let m = GaussianMeanShift::new(0.01).unwrap();
        let k = assemble(&m, Discretization::midpoint(99.2, 8).unwrap()).unwrap();
        assert!(matches!(solve_pair(&k), Err(GsrError::NumericalFailure { .. })));
    }
}
