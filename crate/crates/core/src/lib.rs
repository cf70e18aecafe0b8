//! Performance evaluation of the Generalized Shiryaev–Roberts (GSR)
//! change-point detection procedure.
//!
//! The ARL to false alarm and the stationary average detection delay are
//! obtained by solving Fredholm integral equations of the second kind with a
//! piecewise-linear collocation scheme. A Monte Carlo oracle and a
//! command-line front end are included.

pub mod accuracy;
pub mod calibration;
pub mod cli;
pub mod collocation;
pub mod error;
pub mod grid;
pub mod mc;
pub mod metrics;
pub mod model;
pub mod solver;

pub use collocation::{assemble, Discretization, KernelMatrix, Method};
pub use error::{GsrError, Result};
pub use grid::{Partition, PartitionKind};
pub use metrics::{evaluate, EvalOptions, PerformanceReport};
pub use model::{GaussianMeanShift, LrModel, Regime};
pub use solver::{solve_pair, SolutionPair};
