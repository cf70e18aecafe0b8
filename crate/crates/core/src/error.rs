use thiserror::Error;

/// Errors produced by the evaluation toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GsrError {
    /// An argument falls outside the domain of a function (negative cdf
    /// argument, evaluation point outside `[0, A]`, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid construction parameters (threshold, node count, lengths).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The discretized operator is not a contraction in the sup norm.
    #[error("kernel operator norm {norm} is not below 1 (model/partition inconsistency)")]
    NotContractive { norm: f64 },

    /// The linear system `(I - K) u = v` could not be solved reliably.
    #[error("numerical failure solving (I - K)u = v (operator norm {norm}): {reason}")]
    NumericalFailure { norm: f64, reason: String },

    /// Calibration could not bracket the target ARL.
    #[error(
        "calibration bracket failure: ARL({lo}) = {arl_lo}, ARL({hi}) = {arl_hi}, target {gamma}"
    )]
    BracketFailure {
        lo: f64,
        hi: f64,
        arl_lo: f64,
        arl_hi: f64,
        gamma: f64,
    },

    /// Calibration ran out of iterations before reaching the tolerance.
    #[error("calibration did not converge in {iterations} iterations (last A = {threshold}, ARL = {arl})")]
    NoConvergence {
        iterations: usize,
        threshold: f64,
        arl: f64,
    },

    /// Malformed configuration input.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, GsrError>;
