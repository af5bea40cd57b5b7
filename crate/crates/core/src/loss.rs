//! Closed-form BHHJ (density power divergence) loss for the normal linear
//! model, its first two derivatives, and the expected moment coefficients of
//! the score. `alpha = 0` selects the exact least-squares branch
//! `rho(z) = z^2 / (2 sigma^2)`; the BHHJ formula itself is singular there.
//!
//! The least-squares branch differs from the negative normal log-density by
//! the additive constant `log(2 pi sigma^2) / 2` per observation. Criteria
//! that need the exact log-likelihood add that constant back via
//! [`normal_loglik_constant`]; the loss itself stays scale-free.

use crate::error::{Error, Result};
use crate::math;

/// Divergence choice for the per-residual loss: the BHHJ tuning parameter
/// `alpha >= 0` (zero meaning the KL / least-squares limit) and the fixed
/// nuisance error variance `sigma2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossSpec {
    alpha: f64,
    sigma2: f64,
}

/// Second-moment coefficients of the score under `eps ~ N(0, sigma2)`:
/// `omega_coeff = Var[rho'(eps)]` and `d_coeff = E[rho''(eps)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCoefficients {
    pub omega_coeff: f64,
    pub d_coeff: f64,
}

impl LossSpec {
    pub fn new(alpha: f64, sigma2: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(Error::Invalid("alpha must be finite and nonnegative"));
        }
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::Invalid("sigma2 must be finite and positive"));
        }
        Ok(LossSpec { alpha, sigma2 })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    #[inline]
    pub fn is_kl_limit(&self) -> bool {
        self.alpha == 0.0
    }

    /// `(2 pi)^{-alpha/2} sigma^{-alpha}`, the common prefactor.
    #[inline]
    fn prefactor(&self) -> f64 {
        math::powf(2.0 * core::f64::consts::PI * self.sigma2, -0.5 * self.alpha)
    }

    /// Per-residual loss `rho(z)`.
    #[inline]
    pub fn rho(&self, z: f64) -> f64 {
        debug_assert!(z.is_finite());
        let a = self.alpha;
        if a == 0.0 {
            return z * z / (2.0 * self.sigma2);
        }
        let e = math::exp(-a * z * z / (2.0 * self.sigma2));
        self.prefactor() * (math::powf(a + 1.0, -0.5) - (a + 1.0) / a * e)
    }

    /// First derivative `rho'(z)`. Odd; redescending for `alpha > 0`.
    #[inline]
    pub fn rho_prime(&self, z: f64) -> f64 {
        debug_assert!(z.is_finite());
        let a = self.alpha;
        if a == 0.0 {
            return z / self.sigma2;
        }
        let e = math::exp(-a * z * z / (2.0 * self.sigma2));
        (a + 1.0) * self.prefactor() / self.sigma2 * z * e
    }

    /// Second derivative `rho''(z)`. Negative for `z^2 > sigma^2 / alpha`.
    #[inline]
    pub fn rho_second(&self, z: f64) -> f64 {
        debug_assert!(z.is_finite());
        let a = self.alpha;
        if a == 0.0 {
            return 1.0 / self.sigma2;
        }
        let z2 = z * z;
        let e = math::exp(-a * z2 / (2.0 * self.sigma2));
        (a + 1.0) * self.prefactor() / self.sigma2 * (1.0 - a * z2 / self.sigma2) * e
    }

    /// Total oscillation of the loss: `sup rho - inf rho`, finite for
    /// `alpha > 0`.
    pub fn rho_range(&self) -> Result<f64> {
        let a = self.alpha;
        if a == 0.0 {
            return Err(Error::Invalid("rho is unbounded at alpha = 0"));
        }
        Ok((a + 1.0) / a * self.prefactor())
    }

    /// Closed-form `Var[rho'(eps)]` and `E[rho''(eps)]` for `alpha > 0`. The
    /// KL limit has both coefficients equal to `1 / sigma2` and is rejected
    /// here so callers handle it as the documented special case.
    pub fn moment_coefficients(&self) -> Result<MomentCoefficients> {
        let a = self.alpha;
        if a == 0.0 {
            return Err(Error::Invalid(
                "moment coefficients are the KL special case at alpha = 0",
            ));
        }
        let two_pi = 2.0 * core::f64::consts::PI;
        let omega = (a + 1.0) * (a + 1.0)
            * math::powf(2.0 * a + 1.0, -1.5)
            * math::powf(two_pi, -a)
            * math::powf(self.sigma2, -a - 1.0);
        let d = math::powf(a + 1.0, -0.5)
            * math::powf(two_pi, -0.5 * a)
            * math::powf(self.sigma2, -0.5 * a - 1.0);
        Ok(MomentCoefficients {
            omega_coeff: omega,
            d_coeff: d,
        })
    }
}

/// `n * log(2 pi sigma2) / 2`: the constant separating the `alpha = 0` loss
/// from the exact negative normal log-likelihood. Criteria add `2 *` this to
/// `-2 M_n` at `alpha = 0` so DBBC reproduces the classical BIC exactly.
pub fn normal_loglik_constant(spec: &LossSpec, n: usize) -> f64 {
    0.5 * (n as f64) * math::ln(2.0 * core::f64::consts::PI * spec.sigma2())
}
