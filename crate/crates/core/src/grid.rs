//! Partitions of `[0, A]` and the piecewise-linear "hat" basis.
//!
//! Nodes are stored in ascending order `x_0 = 0 < x_1 < ... < x_{n-1} = A`.
//! Basis functions are indexed from zero: `φ_j` is the hat centred on `x_j`,
//! so `φ_0` has no left ramp and `φ_{n-1}` no right ramp.

use std::f64::consts::PI;

use crate::error::{GsrError, Result};

/// How the nodes were laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    /// Shifted Chebyshev abscissas (the hat-basis method).
    Chebyshev,
    /// Equispaced nodes (the midpoint / Markov-chain method).
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    threshold: f64,
    kind: PartitionKind,
    nodes: Vec<f64>,
    widths: Vec<f64>,
    h_max: f64,
}

fn check_args(threshold: f64, node_count: usize) -> Result<()> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(GsrError::InvalidArgument(format!(
            "threshold A must be positive and finite, got {threshold}"
        )));
    }
    if node_count < 2 {
        return Err(GsrError::InvalidArgument(format!(
            "partition needs at least 2 nodes, got {node_count}"
        )));
    }
    Ok(())
}

impl Partition {
    /// `N` nodes at the shifted Chebyshev abscissas
    /// `x_{N-j} = (A/2)(1 + cos((2j-1)π/(2N)) / cos(π/(2N)))`, `j = 1..N`.
    ///
    /// The end nodes are snapped to exactly `0` and `A`.
    pub fn chebyshev(threshold: f64, node_count: usize) -> Result<Self> {
        check_args(threshold, node_count)?;
        let n = node_count as f64;
        let scale = (PI / (2.0 * n)).cos();
        let mut nodes: Vec<f64> = (1..=node_count)
            .rev()
            .map(|j| {
                let c = ((2 * j - 1) as f64 * PI / (2.0 * n)).cos();
                0.5 * threshold * (1.0 + c / scale)
            })
            .collect();
        nodes[0] = 0.0;
        nodes[node_count - 1] = threshold;
        Ok(Self::from_nodes(threshold, PartitionKind::Chebyshev, nodes))
    }

    /// `node_count` equispaced nodes on `[0, A]`.
    pub fn uniform(threshold: f64, node_count: usize) -> Result<Self> {
        check_args(threshold, node_count)?;
        let step = threshold / (node_count - 1) as f64;
        let mut nodes: Vec<f64> = (0..node_count).map(|k| k as f64 * step).collect();
        nodes[node_count - 1] = threshold;
        Ok(Self::from_nodes(threshold, PartitionKind::Uniform, nodes))
    }

    fn from_nodes(threshold: f64, kind: PartitionKind, nodes: Vec<f64>) -> Self {
        let widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let h_max = widths.iter().copied().fold(0.0, f64::max);
        Self {
            threshold,
            kind,
            nodes,
            widths,
            h_max,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `widths()[k] = x_{k+1} - x_k`.
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    /// Interval midpoints, the collocation nodes of the midpoint method.
    pub fn midpoints(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    fn check_point(&self, x: f64) -> Result<()> {
        if (0.0..=self.threshold).contains(&x) {
            Ok(())
        } else {
            Err(GsrError::Domain(format!(
                "x = {x} outside [0, {}]",
                self.threshold
            )))
        }
    }

    /// Index `k` of the interval `[x_k, x_{k+1}]` containing `x`.
    fn interval_of(&self, x: f64) -> usize {
        let k = self.nodes.partition_point(|&node| node <= x);
        k.saturating_sub(1).min(self.nodes.len() - 2)
    }

    /// Value of the hat function `φ_j` at `x`.
    pub fn hat_eval(&self, j: usize, x: f64) -> Result<f64> {
        if j >= self.nodes.len() {
            return Err(GsrError::InvalidArgument(format!(
                "basis index {j} out of range for {} nodes",
                self.nodes.len()
            )));
        }
        self.check_point(x)?;
        let xs = &self.nodes;
        if x == xs[j] {
            return Ok(1.0);
        }
        if j > 0 && x > xs[j - 1] && x < xs[j] {
            return Ok((x - xs[j - 1]) / self.widths[j - 1]);
        }
        if j + 1 < xs.len() && x > xs[j] && x < xs[j + 1] {
            return Ok((xs[j + 1] - x) / self.widths[j]);
        }
        Ok(0.0)
    }

    /// `Σ_j coeffs_j φ_j(x)`: linear interpolation of nodal values.
    pub fn interpolate(&self, coeffs: &[f64], x: f64) -> Result<f64> {
        if coeffs.len() != self.nodes.len() {
            return Err(GsrError::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                self.nodes.len(),
                coeffs.len()
            )));
        }
        self.check_point(x)?;
        let k = self.interval_of(x);
        let t = (x - self.nodes[k]) / self.widths[k];
        Ok(coeffs[k] * (1.0 - t) + coeffs[k + 1] * t)
    }
}
