//! Proximal-gradient solver for the penalized objective
//! `sum_i rho(y_i - x_i' beta) + n lambda ||w o beta||_1`, with backtracking
//! line search, warm-started paths over a decreasing lambda grid, and KKT
//! convergence certificates.
//!
//! For `alpha > 0` the smooth part is non-convex (the loss redescends), so
//! the solver returns the stationary point reached from the given start;
//! paths are warm-started to keep successive iterates in the same basin.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::loss::LossSpec;
use crate::math;
use crate::penalty::{soft_threshold, WeightVector};

/// Fixed design matrix and response vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Dimension {
                expected: x.rows(),
                got: y.len(),
            });
        }
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::Invalid("dataset must have n >= 1 and P >= 1"));
        }
        if !x.data().iter().all(|v| v.is_finite()) || !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Invalid("dataset entries must be finite"));
        }
        Ok(Dataset { x, y })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.x.cols()
    }

    #[inline]
    pub fn x(&self) -> &Matrix {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Residual vector `y - X beta`.
    pub fn residuals(&self, beta: &[f64]) -> Vec<f64> {
        let xb = self.x.matvec(beta);
        self.y.iter().zip(&xb).map(|(y, f)| y - f).collect()
    }
}

/// Termination state of a single fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FitStatus {
    Converged,
    MaxIterations,
    StepCollapse,
}

/// Solution of the penalized problem at one lambda.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub objective: f64,
    pub iterations: usize,
    pub status: FitStatus,
    pub kkt_residual: f64,
    pub active_set: Vec<usize>,
}

impl FitResult {
    #[inline]
    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }

    #[inline]
    pub fn nu(&self) -> usize {
        self.active_set.len()
    }
}

/// Warm-started solutions along a strictly decreasing lambda grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathFit {
    pub points: Vec<FitResult>,
    pub weights: WeightVector,
    pub spec: LossSpec,
}

/// Solver settings. The defaults mirror the convergence contract: relative
/// objective change below `tol_obj` and KKT residual below `tol_kkt * n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub tol_obj: f64,
    pub tol_kkt: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_obj: 1e-8,
            tol_kkt: 1e-6,
            max_iterations: 10_000,
        }
    }
}

/// Log-spaced grid spanning `[0.01 lc, 100 lc]` with
/// `lc = sqrt(S log P / n)`, in decreasing order.
pub fn default_lambda_grid(n: usize, p: usize, s: usize, length: usize) -> Result<Vec<f64>> {
    if length < 2 {
        return Err(Error::Invalid("grid length must be at least 2"));
    }
    let lc = critical_lambda(n, p, s);
    let lo = math::ln(0.01 * lc);
    let hi = math::ln(100.0 * lc);
    let step = (hi - lo) / ((length - 1) as f64);
    Ok((0..length)
        .map(|i| math::exp(hi - step * i as f64))
        .collect())
}

/// `sqrt(S log P / n)`, the reference order of the regularization parameter.
pub fn critical_lambda(n: usize, p: usize, s: usize) -> f64 {
    let logp = if p > 1 { math::ln(p as f64) } else { 1.0 };
    math::sqrt((s.max(1) as f64) * logp / (n as f64))
}

/// Maximum violation of the stationarity conditions at `beta`:
/// active coordinates must balance the gradient against
/// `n lambda w_j sign(beta_j)`, inactive ones must have gradient magnitude
/// below `n lambda w_j`.
pub fn kkt_residual(
    data: &Dataset,
    spec: &LossSpec,
    w: &WeightVector,
    lambda: f64,
    beta: &[f64],
) -> f64 {
    let r = data.residuals(beta);
    let grad = smooth_gradient(data, spec, &r);
    kkt_residual_from_grad(&grad, w, (data.n() as f64) * lambda, beta)
}

fn kkt_residual_from_grad(grad: &[f64], w: &WeightVector, nl: f64, beta: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for ((&g, &wj), &b) in grad.iter().zip(w.weights()).zip(beta) {
        let v = if b != 0.0 {
            (g + nl * wj * sign(b)).abs()
        } else {
            (g.abs() - nl * wj).max(0.0)
        };
        if v > worst {
            worst = v;
        }
    }
    worst
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Gradient of the smooth part `sum_i rho(r_i)` with respect to beta:
/// `-X' rho'(r)`.
fn smooth_gradient(data: &Dataset, spec: &LossSpec, residuals: &[f64]) -> Vec<f64> {
    let psi: Vec<f64> = residuals.iter().map(|&r| spec.rho_prime(r)).collect();
    let mut g = data.x().tr_matvec(&psi);
    for v in g.iter_mut() {
        *v = -*v;
    }
    g
}

fn smooth_value(spec: &LossSpec, residuals: &[f64]) -> f64 {
    residuals.iter().map(|&r| spec.rho(r)).sum()
}

fn penalty_value(beta: &[f64], w: &WeightVector, nl: f64) -> f64 {
    nl * beta
        .iter()
        .zip(w.weights())
        .map(|(b, w)| w * b.abs())
        .sum::<f64>()
}

fn active_set(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Solve the penalized problem at a single lambda, starting from `beta0`.
pub fn fit_one(
    data: &Dataset,
    spec: &LossSpec,
    w: &WeightVector,
    lambda: f64,
    beta0: &[f64],
    config: &SolverConfig,
) -> Result<FitResult> {
    let step0 = initial_step(data, spec);
    fit_one_with_step(data, spec, w, lambda, beta0, config, step0)
}

/// Conservative initial step: inverse of `max rho'' * lambda_max(X'X)`.
fn initial_step(data: &Dataset, spec: &LossSpec) -> f64 {
    let curvature = spec.rho_second(0.0);
    let gram = data.x().gram_spectral_bound();
    let l = curvature * gram;
    if l > 0.0 && l.is_finite() {
        1.0 / l
    } else {
        1.0
    }
}

fn fit_one_with_step(
    data: &Dataset,
    spec: &LossSpec,
    w: &WeightVector,
    lambda: f64,
    beta0: &[f64],
    config: &SolverConfig,
    step0: f64,
) -> Result<FitResult> {
    let p = data.p();
    if beta0.len() != p {
        return Err(Error::Dimension {
            expected: p,
            got: beta0.len(),
        });
    }
    if w.len() != p {
        return Err(Error::Dimension {
            expected: p,
            got: w.len(),
        });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Invalid("lambda must be positive"));
    }
    if !beta0.iter().all(|v| v.is_finite()) {
        return Err(Error::Invalid("beta0 must be finite"));
    }

    let n = data.n();
    let nl = (n as f64) * lambda;
    let kkt_tol = config.tol_kkt * n as f64;

    let mut beta = beta0.to_vec();
    let mut residuals = data.residuals(&beta);
    let mut smooth = smooth_value(spec, &residuals);
    let mut objective = smooth + penalty_value(&beta, w, nl);

    let mut step = step0;
    let mut status = FitStatus::MaxIterations;
    let mut kkt = f64::INFINITY;
    let mut iterations = 0;
    let mut prev_objective = f64::INFINITY;

    for iter in 0..config.max_iterations {
        iterations = iter;
        let grad = smooth_gradient(data, spec, &residuals);
        kkt = kkt_residual_from_grad(&grad, w, nl, &beta);

        if iter > 0 {
            let rel = (prev_objective - objective).abs() / objective.abs().max(1.0);
            if rel <= config.tol_obj && kkt <= kkt_tol {
                status = FitStatus::Converged;
                break;
            }
        }

        // backtracking proximal step; acceptance implies monotone descent
        let mut accepted = false;
        let mut backtracked = false;
        while step >= 1e-20 {
            let mut candidate = Vec::with_capacity(p);
            for j in 0..p {
                candidate.push(soft_threshold(
                    beta[j] - step * grad[j],
                    step * nl * w.weights()[j],
                ));
            }
            let cand_res = data.residuals(&candidate);
            let cand_smooth = smooth_value(spec, &cand_res);
            let mut gd = 0.0;
            let mut dd = 0.0;
            for j in 0..p {
                let d = candidate[j] - beta[j];
                gd += grad[j] * d;
                dd += d * d;
            }
            if dd == 0.0 {
                // prox fixed point at this step size
                prev_objective = objective;
                accepted = true;
                break;
            }
            // the slack only absorbs roundoff in the smooth sums
            if cand_smooth <= smooth + gd + dd / (2.0 * step) + 4.0 * f64::EPSILON * smooth.abs()
            {
                prev_objective = objective;
                beta = candidate;
                residuals = cand_res;
                smooth = cand_smooth;
                objective = cand_smooth + penalty_value(&beta, w, nl);
                accepted = true;
                break;
            }
            step *= 0.5;
            backtracked = true;
        }
        if !accepted {
            status = FitStatus::StepCollapse;
            break;
        }
        if !backtracked {
            step *= 1.25;
        }
    }

    Ok(FitResult {
        active_set: active_set(&beta),
        beta,
        lambda,
        objective,
        iterations,
        status,
        kkt_residual: kkt,
    })
}

/// Solve along a strictly decreasing, strictly positive lambda grid, warm
/// starting each point from the previous solution. The first point starts
/// from `head_start` (zero by default). Per-point non-convergence flags are
/// recorded, never escalated.
pub fn fit_path(
    data: &Dataset,
    spec: &LossSpec,
    w: &WeightVector,
    lambdas: &[f64],
    config: &SolverConfig,
) -> Result<PathFit> {
    fit_path_from(data, spec, w, lambdas, config, None)
}

pub fn fit_path_from(
    data: &Dataset,
    spec: &LossSpec,
    w: &WeightVector,
    lambdas: &[f64],
    config: &SolverConfig,
    head_start: Option<&[f64]>,
) -> Result<PathFit> {
    if lambdas.is_empty() {
        return Err(Error::Invalid("lambda grid must be nonempty"));
    }
    for pair in lambdas.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::Invalid("lambda grid must be strictly decreasing"));
        }
    }
    if lambdas[lambdas.len() - 1] <= 0.0 {
        return Err(Error::Invalid("lambda grid must be strictly positive"));
    }

    let step0 = initial_step(data, spec);
    let zero = vec![0.0; data.p()];
    let mut start: Vec<f64> = head_start.unwrap_or(&zero).to_vec();
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let fit = fit_one_with_step(data, spec, w, lambda, &start, config, step0)?;
        start = fit.beta.clone();
        points.push(fit);
    }
    Ok(PathFit {
        points,
        weights: w.clone(),
        spec: *spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::WeightVector;

    fn toy_dataset() -> Dataset {
        // n = 4, P = 2
        let x = Matrix::from_vec(
            4,
            2,
            vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0, -1.0, 1.0],
        )
        .unwrap();
        let y = vec![1.0, 2.0, 3.0, 1.0];
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn zero_is_stationary_above_critical_lambda() {
        let data = toy_dataset();
        let spec = LossSpec::new(0.0, 1.0).unwrap();
        let w = WeightVector::uniform(2);
        // critical value: max_j |X_j' y| / n
        let lambda = 2.0;
        let fit = fit_one(&data, &spec, &w, lambda, &[0.0, 0.0], &SolverConfig::default()).unwrap();
        assert!(fit.converged());
        assert!(fit.active_set.is_empty());
    }

    #[test]
    fn objective_never_increases() {
        let data = toy_dataset();
        let spec = LossSpec::new(0.5, 1.0).unwrap();
        let w = WeightVector::uniform(2);
        let start = [5.0, -5.0];
        let start_obj = smooth_value(&spec, &data.residuals(&start))
            + penalty_value(&start, &w, 4.0 * 0.1);
        let fit = fit_one(&data, &spec, &w, 0.1, &start, &SolverConfig::default()).unwrap();
        assert!(fit.objective <= start_obj + 1e-12);
    }

    #[test]
    fn path_rejects_non_decreasing_grid() {
        let data = toy_dataset();
        let spec = LossSpec::new(0.0, 1.0).unwrap();
        let w = WeightVector::uniform(2);
        let err = fit_path(&data, &spec, &w, &[0.5, 0.5], &SolverConfig::default());
        assert!(err.is_err());
    }

    #[test]
    fn default_grid_shape() {
        let grid = default_lambda_grid(500, 200, 10, 3).unwrap();
        let lc = (10.0 * (200.0f64).ln() / 500.0).sqrt();
        assert!((lc - 0.32555).abs() < 1e-4);
        assert!((grid[0] - 100.0 * lc).abs() < 1e-9);
        assert!((grid[1] - lc).abs() < 1e-9);
        assert!((grid[2] - 0.01 * lc).abs() < 1e-9);

        let grid = default_lambda_grid(100, 100, 100, 50).unwrap();
        assert_eq!(grid.len(), 50);
        assert!(grid.windows(2).all(|p| p[1] < p[0]));

        assert!(default_lambda_grid(10, 10, 10, 1).is_err());
    }

    #[test]
    fn zero_column_gets_zero_coefficient() {
        let x = Matrix::from_vec(3, 2, vec![1.0, 0.0, 2.0, 0.0, -1.0, 0.0]).unwrap();
        let data = Dataset::new(x, vec![1.0, 2.0, -1.0]).unwrap();
        let spec = LossSpec::new(0.0, 1.0).unwrap();
        let w = WeightVector::uniform(2);
        let fit = fit_one(&data, &spec, &w, 0.05, &[0.0, 0.0], &SolverConfig::default()).unwrap();
        assert_eq!(fit.beta[1], 0.0);
        assert!(fit.converged());
    }

    #[test]
    fn warm_and_cold_starts_reach_the_same_objective() {
        let data = toy_dataset();
        let spec = LossSpec::new(0.0, 1.0).unwrap();
        let w = WeightVector::uniform(2);
        let grid = [0.5, 0.25, 0.1, 0.05];
        let path = fit_path(&data, &spec, &w, &grid, &SolverConfig::default()).unwrap();
        for (i, &lambda) in grid.iter().enumerate() {
            let cold =
                fit_one(&data, &spec, &w, lambda, &[0.0, 0.0], &SolverConfig::default()).unwrap();
            assert!(
                (cold.objective - path.points[i].objective).abs() <= 1e-8,
                "lambda {lambda}"
            );
        }
    }
}
