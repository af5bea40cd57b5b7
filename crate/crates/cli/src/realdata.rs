//! Real-data benchmark pipeline: interaction expansion, repeated 4:1
//! train/test splits, response contamination, and stability/accuracy
//! summaries (test RMSE, model size, concordance between the supports
//! chosen on raw vs contaminated data).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use robsel_core::criteria::CriterionKind;
use robsel_core::selection::{
    concordance_rate, select, select_many, InitialEstimator, SelectConfig,
};
use robsel_core::solver::{critical_lambda, default_lambda_grid};
use robsel_core::{Dataset, LossSpec, Matrix, WeightScheme};

use crate::error::{AppError, Result};
use crate::io::NumericTable;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealDataConfig {
    /// Name of the response column in the input CSV.
    pub response: String,
    /// Number of training responses to contaminate per repetition.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Contamination multiplier.
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub criteria: Vec<CriterionKind>,
    #[serde(default = "default_grid_length")]
    pub grid_length: usize,
    /// Expected sparsity scale driving the lambda grid and size cap.
    #[serde(default = "default_s_hint")]
    pub s_hint: usize,
    /// Skip the pairwise-interaction expansion (use raw columns only).
    #[serde(default)]
    pub no_interactions: bool,
}

fn default_k() -> usize {
    1
}
fn default_m() -> f64 {
    10.0
}
fn default_reps() -> usize {
    100
}
fn default_grid_length() -> usize {
    50
}
fn default_s_hint() -> usize {
    15
}

impl RealDataConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(AppError::Validation("repetitions must be at least 1".into()));
        }
        if !(self.m.is_finite()) {
            return Err(AppError::Validation("m must be finite".into()));
        }
        if self.alphas.is_empty() || self.criteria.is_empty() {
            return Err(AppError::Validation(
                "alphas and criteria must be nonempty".into(),
            ));
        }
        for &a in &self.alphas {
            if !(a.is_finite() && a >= 0.0) {
                return Err(AppError::Validation(format!("alpha {a} must be >= 0")));
            }
        }
        if self.grid_length < 2 {
            return Err(AppError::Validation("grid_length must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealDataRow {
    pub criterion: String,
    pub alpha: f64,
    pub rmse_mean: f64,
    pub rmse_sd: f64,
    pub nu_mean: f64,
    pub nu_sd: f64,
    pub nu_raw_mean: f64,
    pub nu_raw_sd: f64,
    pub cr_mean: f64,
    pub cr_sd: f64,
    pub failed_reps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealDataReport {
    pub rows: Vec<RealDataRow>,
}

/// Standardize each column, append all pairwise products of the
/// standardized columns, and standardize the products as well. For d raw
/// columns this yields d + d(d-1)/2 columns.
pub fn expand_interactions(raw: &Matrix) -> Result<Matrix> {
    let n = raw.rows();
    let d = raw.cols();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(d + d * (d - 1) / 2);
    for j in 0..d {
        let col: Vec<f64> = (0..n).map(|i| raw.get(i, j)).collect();
        cols.push(standardize_col(&col, j)?);
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let prod: Vec<f64> = (0..n).map(|i| cols[j][i] * cols[k][i]).collect();
            cols.push(standardize_col(&prod, d + j * d + k)?);
        }
    }
    let p = cols.len();
    let mut data = Vec::with_capacity(n * p);
    for i in 0..n {
        for col in &cols {
            data.push(col[i]);
        }
    }
    Matrix::from_vec(n, p, data).map_err(|e| AppError::Validation(e.to_string()))
}

fn standardize_col(col: &[f64], index: usize) -> Result<Vec<f64>> {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(AppError::Validation(format!(
            "zero-variance column at index {index}"
        )));
    }
    let sd = var.sqrt();
    Ok(col.iter().map(|v| (v - mean) / sd).collect())
}

fn rep_rng(seed: u64, rep: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((rep as u64) << 8) | purpose);
    rng
}

#[derive(Debug, Clone, Copy)]
struct CellOutcome {
    rmse: f64,
    nu: usize,
    nu_raw: usize,
    cr: f64,
}

pub fn run_realdata(
    table: &NumericTable,
    config: &RealDataConfig,
    workers: Option<usize>,
) -> Result<RealDataReport> {
    config.validate()?;
    let (y_raw, x_raw, _) = table.split_response(&config.response)?;
    let x_full = if config.no_interactions {
        expand_raw_only(&x_raw)?
    } else {
        expand_interactions(&x_raw)?
    };
    let n = x_full.rows();
    let n_train = ((n as f64) * 0.8).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(AppError::Validation(
            "dataset too small for a 4:1 split".into(),
        ));
    }
    if config.k > n_train {
        return Err(AppError::Validation(format!(
            "k = {} exceeds the training size {}",
            config.k, n_train
        )));
    }

    let run_rep = |rep: usize| -> Vec<std::result::Result<CellOutcome, String>> {
        match run_one_rep(&x_full, &y_raw, config, n_train, rep) {
            Ok(cells) => cells,
            Err(e) => {
                vec![Err(e.to_string()); config.alphas.len() * config.criteria.len()]
            }
        }
    };
    let per_rep: Vec<Vec<std::result::Result<CellOutcome, String>>> = if let Some(w) = workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| AppError::Validation(format!("worker pool: {e}")))?;
        pool.install(|| (0..config.repetitions).into_par_iter().map(run_rep).collect())
    } else {
        (0..config.repetitions).into_par_iter().map(run_rep).collect()
    };

    let mut rows = Vec::new();
    for (ai, &alpha) in config.alphas.iter().enumerate() {
        for (ci, kind) in config.criteria.iter().enumerate() {
            let idx = ai * config.criteria.len() + ci;
            let cells: Vec<&CellOutcome> = per_rep
                .iter()
                .filter_map(|rep| rep[idx].as_ref().ok())
                .collect();
            let failed = config.repetitions - cells.len();
            let (rmse_mean, rmse_sd) = mean_sd(cells.iter().map(|c| c.rmse));
            let (nu_mean, nu_sd) = mean_sd(cells.iter().map(|c| c.nu as f64));
            let (nu_raw_mean, nu_raw_sd) = mean_sd(cells.iter().map(|c| c.nu_raw as f64));
            let (cr_mean, cr_sd) = mean_sd(cells.iter().map(|c| c.cr));
            rows.push(RealDataRow {
                criterion: kind.label().to_string(),
                alpha,
                rmse_mean,
                rmse_sd,
                nu_mean,
                nu_sd,
                nu_raw_mean,
                nu_raw_sd,
                cr_mean,
                cr_sd,
                failed_reps: failed,
            });
        }
    }
    Ok(RealDataReport { rows })
}

/// Standardized raw columns without interactions.
fn expand_raw_only(raw: &Matrix) -> Result<Matrix> {
    let n = raw.rows();
    let d = raw.cols();
    let mut data = vec![0.0; n * d];
    for j in 0..d {
        let col: Vec<f64> = (0..n).map(|i| raw.get(i, j)).collect();
        let std = standardize_col(&col, j)?;
        for i in 0..n {
            data[i * d + j] = std[i];
        }
    }
    Matrix::from_vec(n, d, data).map_err(|e| AppError::Validation(e.to_string()))
}

fn run_one_rep(
    x_full: &Matrix,
    y_raw: &[f64],
    config: &RealDataConfig,
    n_train: usize,
    rep: usize,
) -> Result<Vec<std::result::Result<CellOutcome, String>>> {
    let n = x_full.rows();
    let p = x_full.cols();

    // 4:1 split by a seeded shuffle
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rep_rng(config.seed, rep, 1);
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let (train_idx, test_idx) = order.split_at(n_train);

    // training-statistics standardization of the predictors
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    for j in 0..p {
        let mut sum = 0.0;
        for &i in train_idx {
            sum += x_full.get(i, j);
        }
        let mean = sum / n_train as f64;
        let mut var = 0.0;
        for &i in train_idx {
            var += (x_full.get(i, j) - mean).powi(2);
        }
        var /= n_train as f64;
        if var <= 0.0 {
            return Err(AppError::Validation(format!(
                "zero variance in training split for column {j}"
            )));
        }
        means[j] = mean;
        sds[j] = var.sqrt();
    }
    let subset = |idx: &[usize]| -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * p);
        for &i in idx {
            for j in 0..p {
                data.push((x_full.get(i, j) - means[j]) / sds[j]);
            }
        }
        Matrix::from_vec(idx.len(), p, data).expect("sized by construction")
    };
    let x_train = subset(train_idx);
    let x_test = subset(test_idx);
    let y_test: Vec<f64> = test_idx.iter().map(|&i| y_raw[i]).collect();

    // contaminated copy of the raw training responses, then both are
    // centered by their own training means
    let y_train_raw: Vec<f64> = train_idx.iter().map(|&i| y_raw[i]).collect();
    let mut y_train_cont = y_train_raw.clone();
    let mut crng = rep_rng(config.seed, rep, 2);
    let mut hit = vec![false; n_train];
    let mut placed = 0;
    while placed < config.k {
        let i = crng.random_range(0..n_train);
        if !hit[i] {
            hit[i] = true;
            y_train_cont[i] *= config.m;
            placed += 1;
        }
    }
    let center = |y: &[f64]| -> (Vec<f64>, f64) {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        (y.iter().map(|v| v - mean).collect(), mean)
    };
    let (yc_raw, mean_raw) = center(&y_train_raw);
    let (yc_cont, mean_cont) = center(&y_train_cont);

    let data_raw = Dataset::new(x_train.clone(), yc_raw)?;
    let data_cont = Dataset::new(x_train, yc_cont)?;

    let sigma2_raw = estimate_sigma2(&data_raw, config.s_hint, config.grid_length)?;
    let sigma2_cont = estimate_sigma2(&data_cont, config.s_hint, config.grid_length)?;

    let grid = default_lambda_grid(n_train, p, config.s_hint, config.grid_length)
        .map_err(AppError::from)?;
    let lambda_ref = critical_lambda(n_train, p, config.s_hint);
    let scheme = WeightScheme::scad_default(n_train, lambda_ref);
    let sel_config = SelectConfig {
        initial: InitialEstimator::UniformLasso {
            lambda_init: Some(((p as f64).ln().max(1.0) / n_train as f64).sqrt()),
        },
        ..SelectConfig::default()
    };

    let mut cells = Vec::with_capacity(config.alphas.len() * config.criteria.len());
    for &alpha in &config.alphas {
        let raw_set = LossSpec::new(alpha, sigma2_raw)
            .and_then(|spec| {
                select_many(&data_raw, &spec, &scheme, &grid, &config.criteria, &sel_config)
            });
        let cont_set = LossSpec::new(alpha, sigma2_cont)
            .and_then(|spec| {
                select_many(&data_cont, &spec, &scheme, &grid, &config.criteria, &sel_config)
            });
        match (&raw_set, &cont_set) {
            (Ok(raw), Ok(cont)) => {
                for ci in 0..config.criteria.len() {
                    let cell = match (&raw.results[ci], &cont.results[ci]) {
                        (Ok(r), Ok(c)) => {
                            let pred = x_test.matvec(&c.beta);
                            let rmse = (y_test
                                .iter()
                                .zip(&pred)
                                .map(|(y, f)| (y - (f + mean_cont)).powi(2))
                                .sum::<f64>()
                                / y_test.len() as f64)
                                .sqrt();
                            let _ = mean_raw; // raw fit kept for support comparison only
                            Ok(CellOutcome {
                                rmse,
                                nu: c.active_set.len(),
                                nu_raw: r.active_set.len(),
                                cr: concordance_rate(&r.active_set, &c.active_set, p),
                            })
                        }
                        (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
                    };
                    cells.push(cell);
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                for _ in 0..config.criteria.len() {
                    cells.push(Err(e.to_string()));
                }
            }
        }
    }
    Ok(cells)
}

/// Error-variance estimate from a uniform-weight least-squares LASSO fit:
/// residual sum of squares over (n - nu) degrees of freedom, with the model
/// chosen by BIC.
pub fn estimate_sigma2(data: &Dataset, s_hint: usize, grid_length: usize) -> Result<f64> {
    let n = data.n();
    let y_var = data.y().iter().map(|v| v * v).sum::<f64>() / n as f64;
    let spec = LossSpec::new(0.0, y_var.max(1e-12)).map_err(AppError::from)?;
    let grid =
        default_lambda_grid(n, data.p(), s_hint, grid_length).map_err(AppError::from)?;
    let res = select(
        data,
        &spec,
        &WeightScheme::Uniform,
        &grid,
        CriterionKind::Dbbc,
        &SelectConfig::default(),
    )
    .map_err(|e| AppError::Numerical(format!("sigma2 estimation: {e}")))?;
    let rss: f64 = data
        .residuals(&res.beta)
        .iter()
        .map(|r| r * r)
        .sum();
    let dof = n.saturating_sub(res.active_set.len()).max(1);
    Ok((rss / dof as f64).max(1e-12))
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (mean, var.sqrt())
}
