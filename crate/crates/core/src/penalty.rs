//! Penalty weights for the weighted-L1 term: the uniform scheme, the
//! SCAD-derivative-plus-offset scheme, the exact proximal map of the
//! weighted-L1 penalty, and the log-density of the Laplace prior.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// How per-coefficient weights are generated from an initial estimate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WeightScheme {
    /// `w_j = 1` for every coefficient (plain LASSO).
    Uniform,
    /// `w_j = q + tau(|beta_init_j|)` where `tau` is the SCAD derivative
    /// evaluated at the reference regularization level `lambda_ref`.
    ScadQ {
        /// SCAD shape parameter, must exceed 2 (3.7 is the usual choice).
        a: f64,
        /// Positive offset keeping the Laplace prior proper.
        q: f64,
        /// The lambda at which the SCAD derivative is evaluated.
        lambda_ref: f64,
    },
}

impl WeightScheme {
    /// SCAD scheme with the conventional shape `a = 3.7` and offset
    /// `q = n^{-2}`.
    pub fn scad_default(n: usize, lambda_ref: f64) -> Self {
        let nf = n as f64;
        WeightScheme::ScadQ {
            a: 3.7,
            q: 1.0 / (nf * nf),
            lambda_ref,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightScheme::Uniform => Ok(()),
            WeightScheme::ScadQ { a, q, lambda_ref } => {
                if !(a.is_finite() && a > 2.0) {
                    return Err(Error::Invalid("SCAD shape a must exceed 2"));
                }
                if !(q.is_finite() && q > 0.0) {
                    return Err(Error::Invalid("SCAD offset q must be positive"));
                }
                if !(lambda_ref.is_finite() && lambda_ref > 0.0) {
                    return Err(Error::Invalid("lambda_ref must be positive"));
                }
                Ok(())
            }
        }
    }
}

/// Immutable per-coefficient penalty weights plus the scheme that produced
/// them and a hash of the initial estimate they were built from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightVector {
    w: Vec<f64>,
    scheme: WeightScheme,
    initial_estimate_hash: u64,
}

impl WeightVector {
    /// Uniform weights of the given length.
    pub fn uniform(p: usize) -> Self {
        WeightVector {
            w: alloc::vec![1.0; p],
            scheme: WeightScheme::Uniform,
            initial_estimate_hash: 0,
        }
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.w.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn scheme(&self) -> &WeightScheme {
        &self.scheme
    }

    pub fn initial_estimate_hash(&self) -> u64 {
        self.initial_estimate_hash
    }
}

/// First derivative of the SCAD penalty at `beta_abs`, normalized by
/// `lambda`: 1 on `[0, lambda]`, linearly decreasing on `(lambda, a lambda]`,
/// zero beyond. Continuous and non-increasing.
pub fn scad_derivative(beta_abs: f64, lambda: f64, a: f64) -> f64 {
    debug_assert!(beta_abs >= 0.0 && lambda > 0.0 && a > 2.0);
    if beta_abs <= lambda {
        1.0
    } else if beta_abs <= a * lambda {
        (a * lambda - beta_abs) / ((a - 1.0) * lambda)
    } else {
        0.0
    }
}

/// Build the weight vector from an initial coefficient estimate.
pub fn build_weights(initial_beta: &[f64], scheme: &WeightScheme) -> Result<WeightVector> {
    scheme.validate()?;
    let w = match *scheme {
        WeightScheme::Uniform => alloc::vec![1.0; initial_beta.len()],
        WeightScheme::ScadQ { a, q, lambda_ref } => initial_beta
            .iter()
            .map(|b| q + scad_derivative(b.abs(), lambda_ref, a))
            .collect(),
    };
    Ok(WeightVector {
        w,
        scheme: scheme.clone(),
        initial_estimate_hash: fnv1a(initial_beta),
    })
}

/// Elementwise soft threshold with per-coordinate thresholds
/// `threshold * w_j`: the exact proximal map of
/// `threshold * sum_j w_j |x_j|`.
pub fn prox_weighted_l1(v: &[f64], threshold: f64, w: &WeightVector) -> Result<Vec<f64>> {
    if w.len() != v.len() {
        return Err(Error::Dimension {
            expected: v.len(),
            got: w.len(),
        });
    }
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::Invalid("threshold must be nonnegative"));
    }
    Ok(v.iter()
        .zip(w.weights())
        .map(|(&vj, &wj)| soft_threshold(vj, threshold * wj))
        .collect())
}

#[inline]
pub(crate) fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Log-density of the Laplace prior restricted to the active coordinates:
/// `nu log(n lambda / 2) + sum log w_j - n lambda sum w_j |beta_j|`.
pub fn log_prior(beta_active: &[f64], w_active: &[f64], n: usize, lambda: f64) -> Result<f64> {
    if beta_active.len() != w_active.len() {
        return Err(Error::Dimension {
            expected: beta_active.len(),
            got: w_active.len(),
        });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Invalid("lambda must be positive"));
    }
    let nl = n as f64 * lambda;
    let mut out = 0.0;
    for (j, (&b, &w)) in beta_active.iter().zip(w_active).enumerate() {
        if w <= 0.0 {
            return Err(Error::ZeroWeight(j));
        }
        out += math::ln(nl * w / 2.0) - nl * w * b.abs();
    }
    Ok(out)
}

fn fnv1a(beta: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in beta {
        for byte in b.to_bits().to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}
