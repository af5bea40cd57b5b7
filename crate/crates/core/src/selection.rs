//! End-to-end regularization-parameter selection: build adaptive weights
//! from an initial estimate, fit a warm-started path, score every converged
//! point with the requested criteria, and return the argmin model. Also the
//! support-recovery classification (UM/TM/OM) used to summarize repeated
//! experiments.

use alloc::vec;
use alloc::vec::Vec;

use crate::criteria::{evaluate, CriteriaConfig, CriterionKind, ModelEval};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::loss::LossSpec;
use crate::penalty::{build_weights, WeightScheme, WeightVector};
use crate::solver::{fit_one, fit_path_from, Dataset, PathFit, SolverConfig};

/// Relation of a chosen support to the true support. A model that both
/// misses true coordinates and adds false ones is `Nc` (non-comparable);
/// summaries that only report under/true/over-selection fold `Nc` into `Um`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ModelClass {
    /// Underselected: at least one true coordinate missing, no spurious ones.
    Um,
    /// Exactly the true support.
    Tm,
    /// All true coordinates present plus at least one spurious one.
    Om,
    /// Misses true coordinates and includes spurious ones.
    Nc,
}

/// Classify a chosen support against the truth. Both slices are index sets;
/// order and duplicates are ignored.
pub fn classify(chosen: &[usize], truth: &[usize]) -> ModelClass {
    let missing = truth.iter().any(|t| !chosen.contains(t));
    let extra = chosen.iter().any(|c| !truth.contains(c));
    match (missing, extra) {
        (false, false) => ModelClass::Tm,
        (true, false) => ModelClass::Um,
        (false, true) => ModelClass::Om,
        (true, true) => ModelClass::Nc,
    }
}

/// Fraction of the `p` coordinates on which two supports agree (both in or
/// both out).
pub fn concordance_rate(a: &[usize], b: &[usize], p: usize) -> f64 {
    if p == 0 {
        return 1.0;
    }
    let mut in_a = vec![false; p];
    let mut in_b = vec![false; p];
    for &j in a {
        in_a[j] = true;
    }
    for &j in b {
        in_b[j] = true;
    }
    let agree = in_a.iter().zip(&in_b).filter(|(x, y)| x == y).count();
    agree as f64 / p as f64
}

/// How the initial coefficient estimate feeding the adaptive weights is
/// produced.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum InitialEstimator {
    /// Uniform-weight penalized fit with the same loss, at `lambda_init`
    /// (defaulting to the weight scheme's `lambda_ref`).
    UniformLasso { lambda_init: Option<f64> },
    /// Ridge regression `(X'X + n k I)^{-1} X'y` solved by conjugate
    /// gradients.
    Ridge { penalty: f64 },
    /// Caller-supplied coefficients.
    Provided(Vec<f64>),
}

impl Default for InitialEstimator {
    fn default() -> Self {
        InitialEstimator::UniformLasso { lambda_init: None }
    }
}

/// Settings for the selection pipeline.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectConfig {
    pub solver: SolverConfig,
    pub criteria: CriteriaConfig,
    /// Largest admissible active-set size; path points above it are skipped.
    /// `None` means `min(n / 2, 50, P)`.
    pub max_model_size: Option<usize>,
    pub initial: InitialEstimator,
}

/// Why a path point did or did not receive a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PointStatus {
    Scored,
    NotConverged,
    TooLarge,
    EvalFailed,
}

/// Per-point diagnostic record for one criterion along the path.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathEval {
    pub lambda: f64,
    pub status: PointStatus,
    pub eval: Option<ModelEval>,
}

/// The winning model for one criterion, with the full scored path attached.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectionResult {
    pub kind: CriterionKind,
    pub chosen_index: usize,
    pub lambda: f64,
    pub beta: Vec<f64>,
    pub active_set: Vec<usize>,
    pub value: f64,
    pub evals: Vec<PathEval>,
}

/// Everything produced by one pipeline run: the shared path fit, the initial
/// estimate behind the weights (empty for the uniform scheme), and one
/// outcome per requested criterion, in order. A criterion fails individually
/// (`Error::NoValidCandidate`) when no path point could be scored.
#[derive(Debug, Clone)]
pub struct SelectionSet {
    pub path: PathFit,
    pub initial_beta: Vec<f64>,
    pub results: Vec<core::result::Result<SelectionResult, Error>>,
}

/// Run the full pipeline for one criterion.
pub fn select(
    data: &Dataset,
    spec: &LossSpec,
    scheme: &WeightScheme,
    grid: &[f64],
    kind: CriterionKind,
    config: &SelectConfig,
) -> Result<SelectionResult> {
    let set = select_many(data, spec, scheme, grid, &[kind], config)?;
    set.results.into_iter().next().unwrap()
}

/// Run the pipeline once and score the shared path with several criteria.
/// The path (and hence the per-criterion cost beyond scoring) is fitted a
/// single time.
pub fn select_many(
    data: &Dataset,
    spec: &LossSpec,
    scheme: &WeightScheme,
    grid: &[f64],
    kinds: &[CriterionKind],
    config: &SelectConfig,
) -> Result<SelectionSet> {
    if kinds.is_empty() {
        return Err(Error::Invalid("at least one criterion is required"));
    }
    config.criteria.validate()?;
    scheme.validate()?;

    let (weights, initial_beta) = match scheme {
        WeightScheme::Uniform => (WeightVector::uniform(data.p()), Vec::new()),
        WeightScheme::ScadQ { lambda_ref, .. } => {
            let init = initial_estimate(data, spec, *lambda_ref, config)?;
            let w = build_weights(&init, scheme)?;
            (w, init)
        }
    };

    // non-convex paths start from the convex-limit solution at the head
    let head = if spec.alpha() > 0.0 && !grid.is_empty() {
        let kl = LossSpec::new(0.0, spec.sigma2())?;
        let uniform = WeightVector::uniform(data.p());
        let zero = vec![0.0; data.p()];
        Some(fit_one(data, &kl, &uniform, grid[0], &zero, &config.solver)?.beta)
    } else {
        None
    };

    let path = fit_path_from(data, spec, &weights, grid, &config.solver, head.as_deref())?;
    let cap = config
        .max_model_size
        .unwrap_or_else(|| (data.n() / 2).min(50).min(data.p()).max(1));

    let results = kinds
        .iter()
        .map(|&kind| score_path(data, spec, &weights, &path, kind, cap, &config.criteria))
        .collect();

    Ok(SelectionSet {
        path,
        initial_beta,
        results,
    })
}

fn score_path(
    data: &Dataset,
    spec: &LossSpec,
    weights: &WeightVector,
    path: &PathFit,
    kind: CriterionKind,
    cap: usize,
    criteria: &CriteriaConfig,
) -> core::result::Result<SelectionResult, Error> {
    let mut evals = Vec::with_capacity(path.points.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, point) in path.points.iter().enumerate() {
        let (status, eval) = if !point.converged() {
            (PointStatus::NotConverged, None)
        } else if point.nu() > cap {
            (PointStatus::TooLarge, None)
        } else {
            match evaluate(kind, data, spec, weights, point.lambda, &point.beta, criteria) {
                Ok(e) => (PointStatus::Scored, Some(e)),
                Err(_) => (PointStatus::EvalFailed, None),
            }
        };
        if let Some(e) = &eval {
            // strict improvement only: grid is decreasing, so ties keep the
            // larger lambda
            if best.is_none_or(|(_, v)| e.value < v) {
                best = Some((i, e.value));
            }
        }
        evals.push(PathEval {
            lambda: point.lambda,
            status,
            eval,
        });
    }
    let (chosen_index, value) = best.ok_or(Error::NoValidCandidate)?;
    let winner = &path.points[chosen_index];
    Ok(SelectionResult {
        kind,
        chosen_index,
        lambda: winner.lambda,
        beta: winner.beta.clone(),
        active_set: winner.active_set.clone(),
        value,
        evals,
    })
}

fn initial_estimate(
    data: &Dataset,
    spec: &LossSpec,
    lambda_ref: f64,
    config: &SelectConfig,
) -> Result<Vec<f64>> {
    match &config.initial {
        InitialEstimator::Provided(beta) => {
            if beta.len() != data.p() {
                return Err(Error::Dimension {
                    expected: data.p(),
                    got: beta.len(),
                });
            }
            Ok(beta.clone())
        }
        InitialEstimator::Ridge { penalty } => {
            if !(penalty.is_finite() && *penalty > 0.0) {
                return Err(Error::Invalid("ridge penalty must be positive"));
            }
            Ok(ridge_cg(data, *penalty))
        }
        InitialEstimator::UniformLasso { lambda_init } => {
            let target = lambda_init.unwrap_or(lambda_ref);
            if !(target.is_finite() && target > 0.0) {
                return Err(Error::Invalid("lambda_init must be positive"));
            }
            // short warm-started descent into the target keeps the
            // non-convex fit in the zero-rooted basin
            let mut grid = Vec::with_capacity(6);
            let mut l = target * 32.0;
            while l > target * 1.0001 {
                grid.push(l);
                l *= 0.5;
            }
            grid.push(target);
            let w = WeightVector::uniform(data.p());
            let path = fit_path_from(data, spec, &w, &grid, &config.solver, None)?;
            Ok(path.points.last().unwrap().beta.clone())
        }
    }
}

/// Conjugate gradients on `(X'X + n k I) beta = X'y`.
fn ridge_cg(data: &Dataset, penalty: f64) -> Vec<f64> {
    let p = data.p();
    let nk = data.n() as f64 * penalty;
    let apply = |v: &[f64]| -> Vec<f64> {
        let xv = data.x().matvec(v);
        let mut out = data.x().tr_matvec(&xv);
        for (o, &vj) in out.iter_mut().zip(v) {
            *o += nk * vj;
        }
        out
    };
    let b = data.x().tr_matvec(data.y());
    let mut beta = vec![0.0; p];
    let mut r = b.clone();
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    let tol = 1e-20 * rr.max(1.0);
    for _ in 0..(2 * p).clamp(10, 1000) {
        if rr <= tol {
            break;
        }
        let ad = apply(&d);
        let alpha = rr / dot(&d, &ad);
        for j in 0..p {
            beta[j] += alpha * d[j];
            r[j] -= alpha * ad[j];
        }
        let rr_new = dot(&r, &r);
        let gamma = rr_new / rr;
        for j in 0..p {
            d[j] = r[j] + gamma * d[j];
        }
        rr = rr_new;
    }
    beta
}

/// `min(n / 2, 3 s_hint, 50)`: the admissible model-size cap used by the
/// repeated-experiment harness when the expected sparsity is known.
pub fn default_size_cap(n: usize, s_hint: usize) -> usize {
    (n / 2).min(3 * s_hint.max(1)).clamp(1, 50)
}
