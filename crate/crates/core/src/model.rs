//! Likelihood-ratio models.
//!
//! The detection statistic only ever sees the instantaneous likelihood ratio
//! `Λ = g(X)/f(X)`, so a model is fully described by the law of `Λ` under the
//! pre-change measure `P∞` and the post-change measure `P₀`. The two laws are
//! tied by `dP₀(t) = t dP∞(t)`, which is what makes the collocation matrix
//! computable in closed form.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{GsrError, Result};

/// Which measure generates the observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// No change: observations follow `f`, the LR follows `P∞`.
    PreChange,
    /// Changed: observations follow `g`, the LR follows `P₀`.
    PostChange,
}

/// The law of the likelihood ratio under both measures.
///
/// Implementations must satisfy the change-of-measure identity
/// `dP₀(t) = t dP∞(t)`; [`LrModel::kernel_0`] relies on it.
pub trait LrModel: Send + Sync {
    /// `P∞(Λ ≤ t)`.
    fn cdf_lr_inf(&self, t: f64) -> Result<f64>;

    /// `P₀(Λ ≤ t)`.
    fn cdf_lr_0(&self, t: f64) -> Result<f64>;

    /// Transition density of `R_{n+1}` given `R_n = x` under `P∞`.
    fn kernel_inf(&self, x: f64, y: f64) -> Result<f64>;

    /// Draws one likelihood ratio under the given regime.
    fn sample_lr<R: Rng + ?Sized>(&self, regime: Regime, rng: &mut R) -> f64;

    /// Short human-readable description used in reports.
    fn describe(&self) -> String;

    /// Transition density under `P₀`, obtained from `(1+x) K₀(x,y) = y K∞(x,y)`.
    fn kernel_0(&self, x: f64, y: f64) -> Result<f64> {
        if y <= 0.0 {
            check_headstart(x)?;
            return Ok(0.0);
        }
        Ok(y * self.kernel_inf(x, y)? / (1.0 + x))
    }

    /// Both cdfs at the same argument. Assembly calls this in its inner loop
    /// so models may override it to share work between the two evaluations.
    fn cdf_pair(&self, t: f64) -> Result<(f64, f64)> {
        Ok((self.cdf_lr_inf(t)?, self.cdf_lr_0(t)?))
    }
}

fn check_headstart(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(GsrError::Domain(format!("statistic value x = {x} must be nonnegative")))
    }
}

/// Standard normal cdf, `Φ(z) = erfc(-z/√2)/2`.
///
/// Going through `erfc` keeps relative accuracy in the lower tail down to
/// underflow near `z = -37` (the error grows roughly like `z² ε`, about
/// `1e-13` at `z = -30`); the upper tail
/// saturates to 1 at `z ≈ 8.3` as any double-precision cdf must.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Observations are `N(0, 1)` before the change and `N(θ, 1)` after it.
///
/// The likelihood ratio is `Λ = exp(θX − θ²/2)`, log-normal with log-mean
/// `∓θ²/2` and log-variance `θ²` under `P∞` / `P₀`. Only `|θ|` matters, so the
/// constructor requires `θ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMeanShift {
    theta: f64,
}

impl GaussianMeanShift {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(GsrError::InvalidArgument(format!(
                "theta must be a positive finite number, got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `(ln t + shift)/θ`, formed in log space so tiny `t` never underflows.
    #[inline]
    fn standardized(&self, t: f64, shift: f64) -> f64 {
        (t.ln() + shift) / self.theta
    }

    #[inline]
    fn half_var(&self) -> f64 {
        0.5 * self.theta * self.theta
    }
}

fn check_cdf_arg(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(GsrError::Domain(format!("cdf argument t = {t} must be nonnegative")))
    }
}

impl LrModel for GaussianMeanShift {
    fn cdf_lr_inf(&self, t: f64) -> Result<f64> {
        check_cdf_arg(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(std_normal_cdf(self.standardized(t, self.half_var())))
    }

    fn cdf_lr_0(&self, t: f64) -> Result<f64> {
        check_cdf_arg(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(std_normal_cdf(self.standardized(t, -self.half_var())))
    }

    fn cdf_pair(&self, t: f64) -> Result<(f64, f64)> {
        check_cdf_arg(t)?;
        if t == 0.0 {
            return Ok((0.0, 0.0));
        }
        let log_t = t.ln();
        let hv = self.half_var();
        Ok((
            std_normal_cdf((log_t + hv) / self.theta),
            std_normal_cdf((log_t - hv) / self.theta),
        ))
    }

    fn kernel_inf(&self, x: f64, y: f64) -> Result<f64> {
        check_headstart(x)?;
        if y <= 0.0 {
            return Ok(0.0);
        }
        let z = (y / (1.0 + x)).ln() + self.half_var();
        let exponent = -z * z / (2.0 * self.theta * self.theta);
        // 1/y may overflow while the exponential underflows; the product is 0.
        if exponent < -745.0 {
            return Ok(0.0);
        }
        Ok(exponent.exp() / (y * (2.0 * PI).sqrt() * self.theta))
    }

    fn sample_lr<R: Rng + ?Sized>(&self, regime: Regime, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        let drift = match regime {
            Regime::PreChange => -self.half_var(),
            Regime::PostChange => self.half_var(),
        };
        (self.theta * z + drift).exp()
    }

    fn describe(&self) -> String {
        format!("gaussian-mean-shift(theta={})", self.theta)
    }
}
