//! Monte-Carlo harness for the selection-rate experiments: fixed design per
//! scenario, fresh noise per trial, multiplicative response contamination,
//! and UM/TM/OM rate tables over repeated trials.
//!
//! Reproducibility contract: every random draw comes from a counter-based
//! generator keyed by (scenario seed, trial, purpose), so trial-level
//! parallelism cannot change any result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use robsel_core::criteria::CriterionKind;
use robsel_core::selection::{
    classify, default_size_cap, select_many, InitialEstimator, ModelClass, SelectConfig,
};
use robsel_core::solver::{critical_lambda, default_lambda_grid};
use robsel_core::{Dataset, LossSpec, Matrix, WeightScheme};

use crate::error::{AppError, Result};

/// One factorial simulation experiment: a fixed (n, P, s) design swept over
/// contamination rates, alphas, and criteria.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    /// Defaults to s ones followed by zeros.
    #[serde(default)]
    pub beta_star: Option<Vec<f64>>,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    pub contamination_rates: Vec<f64>,
    #[serde(default = "default_multiplier")]
    pub outlier_multiplier: f64,
    pub alphas: Vec<f64>,
    pub criteria: Vec<CriterionKind>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_grid_length")]
    pub grid_length: usize,
    /// Also run the uniform-weight alpha = 0 BIC/EBIC baselines.
    #[serde(default = "default_true")]
    pub uniform_baselines: bool,
    /// Regularization level of the initial uniform fit feeding the adaptive
    /// weights; defaults to sqrt(log P / n).
    #[serde(default)]
    pub lambda_init: Option<f64>,
}

fn default_sigma2() -> f64 {
    1.0
}
fn default_multiplier() -> f64 {
    10.0
}
fn default_grid_length() -> usize {
    50
}
fn default_true() -> bool {
    true
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if self.s > self.p {
            return Err(AppError::Validation("s must not exceed P".into()));
        }
        if self.n == 0 || self.p == 0 {
            return Err(AppError::Validation("n and P must be positive".into()));
        }
        if self.trials == 0 {
            return Err(AppError::Validation("trials must be at least 1".into()));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(AppError::Validation("sigma2 must be positive".into()));
        }
        if self.contamination_rates.is_empty() {
            return Err(AppError::Validation(
                "at least one contamination rate is required".into(),
            ));
        }
        for &r in &self.contamination_rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(AppError::Validation(format!(
                    "contamination rate {r} outside [0, 1]"
                )));
            }
        }
        for &a in &self.alphas {
            if !(a.is_finite() && a >= 0.0) {
                return Err(AppError::Validation(format!("alpha {a} must be >= 0")));
            }
        }
        if self.alphas.is_empty() && !self.uniform_baselines {
            return Err(AppError::Validation("nothing to run".into()));
        }
        if self.criteria.is_empty() && !self.uniform_baselines {
            return Err(AppError::Validation("no criteria requested".into()));
        }
        if let Some(b) = &self.beta_star {
            if b.len() != self.p {
                return Err(AppError::Validation(format!(
                    "beta_star has {} entries, expected {}",
                    b.len(),
                    self.p
                )));
            }
            if !b.iter().all(|v| v.is_finite()) {
                return Err(AppError::Validation("beta_star must be finite".into()));
            }
        }
        if let Some(l) = self.lambda_init {
            if !(l.is_finite() && l > 0.0) {
                return Err(AppError::Validation("lambda_init must be positive".into()));
            }
        }
        if self.grid_length < 2 {
            return Err(AppError::Validation("grid_length must be at least 2".into()));
        }
        Ok(())
    }

    pub fn beta_star_vec(&self) -> Vec<f64> {
        self.beta_star.clone().unwrap_or_else(|| {
            let mut b = vec![0.0; self.p];
            for v in b.iter_mut().take(self.s) {
                *v = 1.0;
            }
            b
        })
    }

    pub fn truth(&self) -> Vec<usize> {
        self.beta_star_vec()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    /// The design matrix, drawn once per scenario from the dedicated stream.
    pub fn design_matrix(&self) -> Matrix {
        let mut rng = scenario_rng(self.seed, DESIGN_STREAM);
        let mut data = Vec::with_capacity(self.n * self.p);
        for _ in 0..self.n * self.p {
            data.push(standard_normal(&mut rng));
        }
        Matrix::from_vec(self.n, self.p, data).expect("sized by construction")
    }

    pub fn lambda_init_value(&self) -> f64 {
        self.lambda_init
            .unwrap_or_else(|| ((self.p as f64).ln().max(1.0) / self.n as f64).sqrt())
    }
}

const DESIGN_STREAM: u64 = 0;

fn scenario_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// RNG for one trial and purpose; purpose 1 is the noise vector, purposes
/// 2 + k the contamination mask for the k-th rate.
fn trial_rng(seed: u64, trial: usize, purpose: u64) -> ChaCha8Rng {
    scenario_rng(seed, ((trial as u64) << 8) | purpose)
}

pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the library only needs normal draws so this beats pulling
    // in a distributions crate
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Clean response for one trial: y = X beta* + eps, centered.
pub fn generate_response(x: &Matrix, beta_star: &[f64], sigma2: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sd = sigma2.sqrt();
    let mut y = x.matvec(beta_star);
    for v in y.iter_mut() {
        *v += sd * standard_normal(rng);
    }
    center(&mut y);
    y
}

pub fn center(y: &mut [f64]) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    for v in y.iter_mut() {
        *v -= mean;
    }
}

/// Replace each entry by `multiplier * y_i` independently with probability
/// `r`; returns the indices that were replaced.
pub fn contaminate(y: &mut [f64], r: f64, multiplier: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut mask = Vec::new();
    for (i, v) in y.iter_mut().enumerate() {
        if rng.random::<f64>() < r {
            *v *= multiplier;
            mask.push(i);
        }
    }
    mask
}

/// One row of the selection-rate table. Percentages are over the classified
/// trials; failed trials are excluded and counted. Mixed miss/extra models
/// are folded into UM, with the raw count kept in `nc_count`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateRow {
    pub criterion: String,
    pub alpha: f64,
    pub r: f64,
    pub um: f64,
    pub tm: f64,
    pub om: f64,
    pub nc_count: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

/// Outcome of one (method, trial, rate) cell.
#[derive(Debug, Clone, Copy)]
enum TrialOutcome {
    Class(ModelClass),
    Failed,
}

/// Method identity: an adaptive run at some alpha, or a uniform-weight
/// alpha = 0 baseline.
#[derive(Debug, Clone, PartialEq)]
struct MethodKey {
    criterion: String,
    alpha: f64,
}

pub fn run_scenario(scenario: &SimScenario, workers: Option<usize>) -> Result<RateTable> {
    scenario.validate()?;
    let indices: Vec<usize> = (0..scenario.contamination_rates.len()).collect();
    run_rates(scenario, &indices, workers)
}

/// Run a single contamination rate of the scenario (by its index in the
/// full rate list). Chunked runs reproduce the whole-scenario results
/// exactly because every random stream is keyed by the full-list index.
pub fn run_scenario_rate(
    scenario: &SimScenario,
    rate_index: usize,
    workers: Option<usize>,
) -> Result<RateTable> {
    scenario.validate()?;
    if rate_index >= scenario.contamination_rates.len() {
        return Err(AppError::Validation(format!(
            "rate index {rate_index} out of range"
        )));
    }
    run_rates(scenario, &[rate_index], workers)
}

fn run_rates(
    scenario: &SimScenario,
    rate_indices: &[usize],
    workers: Option<usize>,
) -> Result<RateTable> {
    let x = scenario.design_matrix();
    let beta_star = scenario.beta_star_vec();
    let truth = scenario.truth();

    let methods = method_keys(scenario);
    let run_trial = |trial: usize| -> Vec<TrialOutcome> {
        let mut noise_rng = trial_rng(scenario.seed, trial, 1);
        let y_clean = generate_response(&x, &beta_star, scenario.sigma2, &mut noise_rng);
        let mut outcomes = Vec::with_capacity(methods.len() * rate_indices.len());
        for &k in rate_indices {
            let r = scenario.contamination_rates[k];
            let mut y = y_clean.clone();
            let mut contam_rng = trial_rng(scenario.seed, trial, 2 + k as u64);
            contaminate(&mut y, r, scenario.outlier_multiplier, &mut contam_rng);
            let data = match Dataset::new(x.clone(), y) {
                Ok(d) => d,
                Err(_) => {
                    outcomes.extend(std::iter::repeat_n(TrialOutcome::Failed, methods.len()));
                    continue;
                }
            };
            outcomes.extend(classify_all(scenario, &data, &truth));
        }
        outcomes
    };

    let per_trial: Vec<Vec<TrialOutcome>> = if let Some(w) = workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| AppError::Validation(format!("worker pool: {e}")))?;
        pool.install(|| (0..scenario.trials).into_par_iter().map(run_trial).collect())
    } else {
        (0..scenario.trials).into_par_iter().map(run_trial).collect()
    };

    // deterministic reduction in trial order
    let mut rows = Vec::new();
    for (pos, &k) in rate_indices.iter().enumerate() {
        let r = scenario.contamination_rates[k];
        for (m, key) in methods.iter().enumerate() {
            let idx = pos * methods.len() + m;
            let (mut um, mut tm, mut om, mut nc, mut excluded) = (0usize, 0, 0, 0, 0);
            for trial in per_trial.iter() {
                match trial[idx] {
                    TrialOutcome::Class(ModelClass::Um) => um += 1,
                    TrialOutcome::Class(ModelClass::Tm) => tm += 1,
                    TrialOutcome::Class(ModelClass::Om) => om += 1,
                    TrialOutcome::Class(ModelClass::Nc) => {
                        um += 1;
                        nc += 1;
                    }
                    TrialOutcome::Failed => excluded += 1,
                }
            }
            let denom = (scenario.trials - excluded).max(1) as f64;
            rows.push(RateRow {
                criterion: key.criterion.clone(),
                alpha: key.alpha,
                r,
                um: 100.0 * um as f64 / denom,
                tm: 100.0 * tm as f64 / denom,
                om: 100.0 * om as f64 / denom,
                nc_count: nc,
                excluded,
            });
        }
    }
    Ok(RateTable { rows })
}

fn method_keys(scenario: &SimScenario) -> Vec<MethodKey> {
    let mut keys = Vec::new();
    for &alpha in &scenario.alphas {
        for kind in &scenario.criteria {
            keys.push(MethodKey {
                criterion: kind.label().to_string(),
                alpha,
            });
        }
    }
    if scenario.uniform_baselines {
        keys.push(MethodKey {
            criterion: "unif-BIC".into(),
            alpha: 0.0,
        });
        keys.push(MethodKey {
            criterion: "unif-EBIC".into(),
            alpha: 0.0,
        });
    }
    keys
}

/// Run every requested method on one contaminated dataset, in the same
/// order as `method_keys`.
fn classify_all(scenario: &SimScenario, data: &Dataset, truth: &[usize]) -> Vec<TrialOutcome> {
    let grid = match default_lambda_grid(scenario.n, scenario.p, scenario.s, scenario.grid_length)
    {
        Ok(g) => g,
        Err(_) => return vec![TrialOutcome::Failed; method_keys(scenario).len()],
    };
    let lambda_ref = critical_lambda(scenario.n, scenario.p, scenario.s);
    let config = SelectConfig {
        max_model_size: Some(default_size_cap(scenario.n, scenario.s)),
        initial: InitialEstimator::UniformLasso {
            lambda_init: Some(scenario.lambda_init_value()),
        },
        ..SelectConfig::default()
    };
    let scheme = WeightScheme::scad_default(scenario.n, lambda_ref);

    let mut outcomes = Vec::new();
    for &alpha in &scenario.alphas {
        match LossSpec::new(alpha, scenario.sigma2) {
            Ok(spec) => {
                match select_many(data, &spec, &scheme, &grid, &scenario.criteria, &config) {
                    Ok(set) => {
                        for res in &set.results {
                            outcomes.push(match res {
                                Ok(sel) => {
                                    TrialOutcome::Class(classify(&sel.active_set, truth))
                                }
                                Err(_) => TrialOutcome::Failed,
                            });
                        }
                    }
                    Err(_) => outcomes
                        .extend(std::iter::repeat_n(TrialOutcome::Failed, scenario.criteria.len())),
                }
            }
            Err(_) => outcomes
                .extend(std::iter::repeat_n(TrialOutcome::Failed, scenario.criteria.len())),
        }
    }
    if scenario.uniform_baselines {
        let spec = LossSpec::new(0.0, scenario.sigma2).expect("valid");
        match select_many(
            data,
            &spec,
            &WeightScheme::Uniform,
            &grid,
            &[CriterionKind::Dbbc, CriterionKind::Edbbc],
            &config,
        ) {
            Ok(set) => {
                for res in &set.results {
                    outcomes.push(match res {
                        Ok(sel) => TrialOutcome::Class(classify(&sel.active_set, truth)),
                        Err(_) => TrialOutcome::Failed,
                    });
                }
            }
            Err(_) => outcomes.extend([TrialOutcome::Failed, TrialOutcome::Failed]),
        }
    }
    outcomes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_scenario() -> SimScenario {
        SimScenario {
            n: 50,
            p: 8,
            s: 2,
            beta_star: None,
            sigma2: 1.0,
            contamination_rates: vec![0.0],
            outlier_multiplier: 10.0,
            alphas: vec![0.1],
            criteria: vec![CriterionKind::Edbbc],
            trials: 3,
            seed: 7,
            grid_length: 30,
            uniform_baselines: false,
            lambda_init: None,
        }
    }

    #[test]
    fn design_matrix_is_deterministic() {
        let s = tiny_scenario();
        assert_eq!(s.design_matrix(), s.design_matrix());
    }

    #[test]
    fn responses_differ_across_trials_but_reproduce() {
        let s = tiny_scenario();
        let x = s.design_matrix();
        let b = s.beta_star_vec();
        let y0 = generate_response(&x, &b, 1.0, &mut trial_rng(s.seed, 0, 1));
        let y0b = generate_response(&x, &b, 1.0, &mut trial_rng(s.seed, 0, 1));
        let y1 = generate_response(&x, &b, 1.0, &mut trial_rng(s.seed, 1, 1));
        assert_eq!(y0, y0b);
        assert_ne!(y0, y1);
        let mean: f64 = y0.iter().sum::<f64>() / y0.len() as f64;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn residual_variance_matches_sigma2_at_large_n() {
        let s = SimScenario {
            n: 5000,
            p: 4,
            s: 2,
            ..tiny_scenario()
        };
        let x = s.design_matrix();
        let b = s.beta_star_vec();
        let y = generate_response(&x, &b, 1.0, &mut trial_rng(9, 0, 1));
        let fitted = x.matvec(&b);
        let mean_f: f64 = fitted.iter().sum::<f64>() / fitted.len() as f64;
        let var: f64 = y
            .iter()
            .zip(&fitted)
            .map(|(yi, fi)| (yi - (fi - mean_f)).powi(2))
            .sum::<f64>()
            / y.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn contaminate_edge_cases() {
        let mut rng = trial_rng(1, 0, 2);
        let mut y = vec![1.0, -2.0, 3.0];
        assert!(contaminate(&mut y, 0.0, 10.0, &mut rng).is_empty());
        assert_eq!(y, vec![1.0, -2.0, 3.0]);
        let mask = contaminate(&mut y, 1.0, 10.0, &mut rng);
        assert_eq!(mask, vec![0, 1, 2]);
        assert_eq!(y, vec![10.0, -20.0, 30.0]);
    }

    #[test]
    fn contamination_mask_concentrates() {
        let mut rng = trial_rng(3, 0, 2);
        let mut y = vec![1.0; 10_000];
        let mask = contaminate(&mut y, 0.05, 10.0, &mut rng);
        // 3 sigma of Binomial(1e4, 0.05)
        let sd = (10_000.0f64 * 0.05 * 0.95).sqrt();
        assert!((mask.len() as f64 - 500.0).abs() < 3.0 * sd, "{}", mask.len());
    }

    #[test]
    fn rate_rows_sum_to_100() {
        let table = run_scenario(&tiny_scenario(), Some(2)).unwrap();
        assert_eq!(table.rows.len(), 1);
        for row in &table.rows {
            assert!((row.um + row.tm + row.om - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn scenario_is_deterministic_across_worker_counts() {
        let s = tiny_scenario();
        let t1 = run_scenario(&s, Some(1)).unwrap();
        let t2 = run_scenario(&s, Some(4)).unwrap();
        assert_eq!(
            serde_json::to_string(&t1).unwrap(),
            serde_json::to_string(&t2).unwrap()
        );
    }

    #[test]
    fn chunked_rates_reproduce_the_whole_run() {
        let mut s = tiny_scenario();
        s.contamination_rates = vec![0.0, 0.2];
        let whole = run_scenario(&s, Some(2)).unwrap();
        let mut chunked = Vec::new();
        for k in 0..2 {
            chunked.extend(run_scenario_rate(&s, k, Some(2)).unwrap().rows);
        }
        assert_eq!(
            serde_json::to_string(&whole.rows).unwrap(),
            serde_json::to_string(&chunked).unwrap()
        );
    }

    #[test]
    fn single_trial_gives_a_degenerate_row() {
        let mut s = tiny_scenario();
        s.trials = 1;
        let table = run_scenario(&s, Some(1)).unwrap();
        let row = &table.rows[0];
        let cells = [row.um, row.tm, row.om];
        assert_eq!(cells.iter().filter(|&&c| c == 100.0).count(), 1);
        assert_eq!(cells.iter().filter(|&&c| c == 0.0).count(), 2);
    }

    #[test]
    fn validation_rejects_bad_scenarios() {
        let mut s = tiny_scenario();
        s.s = 100;
        assert!(run_scenario(&s, None).is_err());
        let mut s = tiny_scenario();
        s.contamination_rates = vec![1.5];
        assert!(run_scenario(&s, None).is_err());
        let mut s = tiny_scenario();
        s.trials = 0;
        assert!(run_scenario(&s, None).is_err());
    }
}
