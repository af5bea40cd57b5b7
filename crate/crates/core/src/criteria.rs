//! Model evaluation criteria for choosing the regularization parameter:
//! DBBC, E-DBBC, and GE-DBBC (exact and practical forms), all built on the
//! quasi-likelihood `M_n = -sum_i rho(r_i)`.
//!
//! At `alpha = 0` the normal-density constant is added back so that DBBC
//! reproduces the classical BIC and E-DBBC the EBIC bit-for-bit.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::loss::{normal_loglik_constant, LossSpec};
use crate::math;
use crate::penalty::{log_prior, WeightVector};
use crate::solver::Dataset;

/// Which criterion to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CriterionKind {
    Dbbc,
    Edbbc,
    GedbbcExact,
    GedbbcPractical,
}

impl CriterionKind {
    pub fn label(&self) -> &'static str {
        match self {
            CriterionKind::Dbbc => "DBBC",
            CriterionKind::Edbbc => "E-DBBC",
            CriterionKind::GedbbcExact => "GE-DBBC-exact",
            CriterionKind::GedbbcPractical => "GE-DBBC",
        }
    }
}

/// Shared criterion settings: the EBIC-style prior exponent `gamma` in
/// (0, 1) and the weight-offset exponent `zeta` (`q_n = n^{-zeta}`), which
/// must exceed 3/2.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriteriaConfig {
    pub gamma: f64,
    pub zeta: f64,
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        CriteriaConfig {
            gamma: 0.5,
            zeta: 2.0,
        }
    }
}

impl CriteriaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Invalid("gamma must lie strictly in (0, 1)"));
        }
        if !(self.zeta.is_finite() && self.zeta > 1.5) {
            return Err(Error::Invalid("zeta must exceed 3/2"));
        }
        Ok(())
    }
}

/// Labeled decomposition of a criterion value. The components always sum to
/// the value; terms a given criterion does not use are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Components {
    pub main: f64,
    pub log_n: f64,
    pub log_p: f64,
    pub prior: f64,
    pub log_det: f64,
}

impl Components {
    pub fn sum(&self) -> f64 {
        self.main + self.log_n + self.log_p + self.prior + self.log_det
    }
}

/// One criterion value for one fitted model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelEval {
    pub kind: CriterionKind,
    pub nu: usize,
    pub m_n: f64,
    pub value: f64,
    pub components: Components,
}

/// Quasi-likelihood `M_n(beta) = -sum_i rho(y_i - x_i' beta)`. The alpha = 0
/// normal constant is *not* included here; see
/// [`crate::loss::normal_loglik_constant`].
pub fn quasi_likelihood(data: &Dataset, spec: &LossSpec, beta: &[f64]) -> f64 {
    -data
        .residuals(beta)
        .iter()
        .map(|&r| spec.rho(r))
        .sum::<f64>()
}

/// Curvature matrix `T_n` on the active coordinates:
/// `(1/n) sum_i rho''(r_i) x_i[active] x_i[active]'`. The weighted-L1 prior
/// contributes no curvature off the kink, so this is the exact negative
/// scaled Hessian of `R_n`.
pub fn t_matrix(
    data: &Dataset,
    spec: &LossSpec,
    beta: &[f64],
    active: &[usize],
) -> Result<Matrix> {
    if active.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let nu = active.len();
    let n = data.n();
    let residuals = data.residuals(beta);
    let mut t = Matrix::zeros(nu, nu);
    let mut xa = Vec::with_capacity(nu);
    for (i, &r) in residuals.iter().enumerate().take(n) {
        let weight = spec.rho_second(r) / n as f64;
        let row = data.x().row(i);
        xa.clear();
        xa.extend(active.iter().map(|&j| row[j]));
        for a in 0..nu {
            let wa = weight * xa[a];
            for (b, &xb) in xa.iter().enumerate().skip(a) {
                let v = t.get(a, b) + wa * xb;
                t.set(a, b, v);
            }
        }
    }
    for a in 0..nu {
        for b in 0..a {
            let v = t.get(b, a);
            t.set(a, b, v);
        }
    }
    Ok(t)
}

/// `-2 M_n` including the alpha = 0 normal constant when applicable.
fn main_term(data: &Dataset, spec: &LossSpec, m_n: f64) -> f64 {
    let constant = if spec.is_kl_limit() {
        2.0 * normal_loglik_constant(spec, data.n())
    } else {
        0.0
    };
    -2.0 * m_n + constant
}

fn active_of(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Evaluate one criterion for the fitted coefficients `beta` (used as-is,
/// no refitting). The null model (empty active set) is scored by the main
/// term alone.
pub fn evaluate(
    kind: CriterionKind,
    data: &Dataset,
    spec: &LossSpec,
    weights: &WeightVector,
    lambda: f64,
    beta: &[f64],
    config: &CriteriaConfig,
) -> Result<ModelEval> {
    config.validate()?;
    if beta.len() != data.p() {
        return Err(Error::Dimension {
            expected: data.p(),
            got: beta.len(),
        });
    }
    let active = active_of(beta);
    let nu = active.len();
    let m_n = quasi_likelihood(data, spec, beta);
    let mut components = Components {
        main: main_term(data, spec, m_n),
        ..Components::default()
    };

    if nu > 0 {
        let n = data.n() as f64;
        let p = data.p() as f64;
        let nuf = nu as f64;
        let log_p_term = 2.0 * (1.0 - config.gamma) * nuf * math::ln(p);
        match kind {
            CriterionKind::Dbbc => {
                components.log_n = nuf * math::ln(n);
            }
            CriterionKind::Edbbc => {
                components.log_n = nuf * math::ln(n);
                components.log_p = log_p_term;
            }
            CriterionKind::GedbbcExact => {
                let beta_active: Vec<f64> = active.iter().map(|&j| beta[j]).collect();
                let w_active: Vec<f64> = active.iter().map(|&j| weights.weights()[j]).collect();
                let lp = log_prior(&beta_active, &w_active, data.n(), lambda)?;
                let t = t_matrix(data, spec, beta, &active)?;
                components.prior = -2.0 * lp;
                components.log_n = nuf * math::ln(n);
                components.log_p = log_p_term;
                components.log_det =
                    t.log_det()? - nuf * math::ln(2.0 * core::f64::consts::PI);
            }
            CriterionKind::GedbbcPractical => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return Err(Error::Invalid("lambda must be positive"));
                }
                let t = t_matrix(data, spec, beta, &active)?;
                components.prior = -2.0 * nuf * math::ln(lambda);
                components.log_n = (2.0 * config.zeta - 1.0) * nuf * math::ln(n);
                components.log_p = log_p_term;
                components.log_det = t.log_det()?;
            }
        }
    }

    Ok(ModelEval {
        kind,
        nu,
        m_n,
        value: components.sum(),
        components,
    })
}

pub fn dbbc(
    data: &Dataset,
    spec: &LossSpec,
    beta: &[f64],
    config: &CriteriaConfig,
) -> Result<ModelEval> {
    let w = WeightVector::uniform(data.p());
    evaluate(CriterionKind::Dbbc, data, spec, &w, 1.0, beta, config)
}

pub fn edbbc(
    data: &Dataset,
    spec: &LossSpec,
    beta: &[f64],
    config: &CriteriaConfig,
) -> Result<ModelEval> {
    let w = WeightVector::uniform(data.p());
    evaluate(CriterionKind::Edbbc, data, spec, &w, 1.0, beta, config)
}

pub fn gedbbc_exact(
    data: &Dataset,
    spec: &LossSpec,
    weights: &WeightVector,
    lambda: f64,
    beta: &[f64],
    config: &CriteriaConfig,
) -> Result<ModelEval> {
    evaluate(
        CriterionKind::GedbbcExact,
        data,
        spec,
        weights,
        lambda,
        beta,
        config,
    )
}

pub fn gedbbc_practical(
    data: &Dataset,
    spec: &LossSpec,
    lambda: f64,
    beta: &[f64],
    config: &CriteriaConfig,
) -> Result<ModelEval> {
    let w = WeightVector::uniform(data.p());
    evaluate(
        CriterionKind::GedbbcPractical,
        data,
        spec,
        &w,
        lambda,
        beta,
        config,
    )
}
