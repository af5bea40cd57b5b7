//! `robsel` — robust sparse regression benchmark tool.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical failure,
//! 3 I/O failure. No output files are written when validation fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use robsel::config::{load_config, DataConfig, ModelConfig, RunConfig};
use robsel::error::{AppError, Result};
use robsel::io::{
    read_numeric_csv, write_json, write_manifest, write_plot_data_csv, write_rate_table_csv,
    write_realdata_csv, NumericTable,
};
use robsel::realdata::{estimate_sigma2, run_realdata};
use robsel::sim::{run_scenario_rate, RateTable};
use robsel_core::penalty::build_weights;
use robsel_core::selection::select_many;
use robsel_core::solver::{critical_lambda, default_lambda_grid, fit_one, fit_path};
use robsel_core::{Dataset, FitStatus, LossSpec, WeightScheme, WeightVector};

#[derive(Parser)]
#[command(name = "robsel", version, about = "Robust sparse regression benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV (overrides [data].csv).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Response column name (overrides [data].response).
    #[arg(long)]
    response: Option<String>,
    /// BHHJ tuning parameter alpha (overrides [model].alpha).
    #[arg(long)]
    alpha: Option<f64>,
    /// Error variance (overrides [model].sigma2).
    #[arg(long)]
    sigma2: Option<f64>,
    /// Worker threads for the harness commands.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the penalized problem at one regularization level.
    Fit {
        #[command(flatten)]
        common: CommonOpts,
        /// Regularization level (overrides [model].lambda).
        #[arg(long)]
        lambda: Option<f64>,
        /// Output JSON path.
        #[arg(long, default_value = "fit.json")]
        out: PathBuf,
    },
    /// Fit the full regularization path.
    Path {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value = "path.json")]
        out: PathBuf,
    },
    /// Pick the regularization level by the configured criteria.
    Select {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value = "select.json")]
        out: PathBuf,
    },
    /// Run a Monte-Carlo selection-rate experiment.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        /// Override [simulate].trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Override [simulate].seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "sim-out")]
        out_dir: PathBuf,
    },
    /// Run the real-data contamination benchmark on a CSV.
    Analyze {
        #[command(flatten)]
        common: CommonOpts,
        /// Override [analyze].repetitions.
        #[arg(long)]
        repetitions: Option<usize>,
        /// Override [analyze].seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "analyze-out")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit { common, lambda, out } => cmd_fit(&common, lambda, &out),
        Command::Path { common, out } => cmd_path(&common, &out),
        Command::Select { common, out } => cmd_select(&common, &out),
        Command::Simulate {
            common,
            trials,
            seed,
            out_dir,
        } => cmd_simulate(&common, trials, seed, &out_dir),
        Command::Analyze {
            common,
            repetitions,
            seed,
            out_dir,
        } => cmd_analyze(&common, repetitions, seed, &out_dir),
    }
}

struct Session {
    config: RunConfig,
    model: ModelConfig,
}

impl Session {
    fn new(common: &CommonOpts) -> Result<Self> {
        let config = match &common.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        let mut model = config.model.clone().unwrap_or_default();
        if let Some(a) = common.alpha {
            model.alpha = a;
        }
        if let Some(s2) = common.sigma2 {
            model.sigma2 = Some(s2);
        }
        Ok(Session { config, model })
    }

    fn load_table(&self, common: &CommonOpts) -> Result<(NumericTable, String)> {
        let (csv, response) = match (&common.data, &self.config.data) {
            (Some(p), d) => (
                p.clone(),
                common
                    .response
                    .clone()
                    .or_else(|| d.as_ref().map(|d| d.response.clone()))
                    .ok_or_else(|| {
                        AppError::Validation("response column name is required".into())
                    })?,
            ),
            (None, Some(DataConfig { csv, response })) => (
                csv.clone(),
                common.response.clone().unwrap_or_else(|| response.clone()),
            ),
            (None, None) => {
                return Err(AppError::Validation(
                    "an input CSV is required (--data or [data].csv)".into(),
                ))
            }
        };
        Ok((read_numeric_csv(&csv)?, response))
    }

    fn workers(&self, common: &CommonOpts) -> Option<usize> {
        common.workers.or(self.config.workers)
    }

    /// Loss spec with sigma2 estimated from a uniform LASSO fit when the
    /// config leaves it open.
    fn loss_spec(&self, data: &Dataset) -> Result<LossSpec> {
        let sigma2 = match self.model.sigma2 {
            Some(s2) => s2,
            None => estimate_sigma2(data, self.model.s_hint, self.model.grid_length)?,
        };
        LossSpec::new(self.model.alpha, sigma2).map_err(AppError::from)
    }

    /// Penalty weights; the SCAD scheme needs the initial uniform fit.
    fn weights(&self, data: &Dataset, spec: &LossSpec) -> Result<WeightVector> {
        let lambda_ref = critical_lambda(data.n(), data.p(), self.model.s_hint);
        match self.model.weight_scheme(data.n(), lambda_ref) {
            WeightScheme::Uniform => Ok(WeightVector::uniform(data.p())),
            scheme @ WeightScheme::ScadQ { .. } => {
                let sel = self.model.select_config(data.n(), data.p());
                let grid = [spec_lambda_init(&sel)];
                let uniform = WeightVector::uniform(data.p());
                let path = fit_path(data, spec, &uniform, &grid, &sel.solver)
                    .map_err(AppError::from)?;
                build_weights(&path.points[0].beta, &scheme).map_err(AppError::from)
            }
        }
    }
}

fn spec_lambda_init(sel: &robsel_core::selection::SelectConfig) -> f64 {
    match &sel.initial {
        robsel_core::selection::InitialEstimator::UniformLasso { lambda_init } => {
            lambda_init.expect("set by ModelConfig::select_config")
        }
        _ => unreachable!("select_config always uses the uniform initial fit"),
    }
}

fn cmd_fit(common: &CommonOpts, lambda: Option<f64>, out: &Path) -> Result<()> {
    let session = Session::new(common)?;
    let lambda = lambda
        .or(session.model.lambda)
        .ok_or_else(|| AppError::Validation("fit requires a lambda".into()))?;
    let (table, response) = session.load_table(common)?;
    let data = table.to_dataset(&response)?;
    let spec = session.loss_spec(&data)?;
    let weights = session.weights(&data, &spec)?;
    let zero = vec![0.0; data.p()];
    let sel = session.model.select_config(data.n(), data.p());
    let fit = fit_one(&data, &spec, &weights, lambda, &zero, &sel.solver)?;
    let converged = fit.status == FitStatus::Converged;
    write_json(out, &fit)?;
    if !converged {
        return Err(AppError::Numerical(format!(
            "fit did not converge ({:?}); result written to {}",
            fit.status,
            out.display()
        )));
    }
    Ok(())
}

fn cmd_path(common: &CommonOpts, out: &Path) -> Result<()> {
    let session = Session::new(common)?;
    let (table, response) = session.load_table(common)?;
    let data = table.to_dataset(&response)?;
    let spec = session.loss_spec(&data)?;
    let weights = session.weights(&data, &spec)?;
    let grid = default_lambda_grid(
        data.n(),
        data.p(),
        session.model.s_hint,
        session.model.grid_length,
    )?;
    let sel = session.model.select_config(data.n(), data.p());
    let path = fit_path(&data, &spec, &weights, &grid, &sel.solver)?;
    write_json(out, &path)
}

#[derive(Serialize)]
struct SelectOutput {
    sigma2: f64,
    results: Vec<robsel_core::selection::SelectionResult>,
    failures: Vec<SelectFailure>,
}

#[derive(Serialize)]
struct SelectFailure {
    criterion: String,
    error: String,
}

fn cmd_select(common: &CommonOpts, out: &Path) -> Result<()> {
    let session = Session::new(common)?;
    let (table, response) = session.load_table(common)?;
    let data = table.to_dataset(&response)?;
    let spec = session.loss_spec(&data)?;
    let lambda_ref = critical_lambda(data.n(), data.p(), session.model.s_hint);
    let scheme = session.model.weight_scheme(data.n(), lambda_ref);
    let grid = default_lambda_grid(
        data.n(),
        data.p(),
        session.model.s_hint,
        session.model.grid_length,
    )?;
    let sel = session.model.select_config(data.n(), data.p());
    let set = select_many(&data, &spec, &scheme, &grid, &session.model.criteria, &sel)?;
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (kind, res) in session.model.criteria.iter().zip(set.results) {
        match res {
            Ok(r) => results.push(r),
            Err(e) => failures.push(SelectFailure {
                criterion: kind.label().to_string(),
                error: e.to_string(),
            }),
        }
    }
    let output = SelectOutput {
        sigma2: spec.sigma2(),
        results,
        failures,
    };
    write_json(out, &output)?;
    if output.results.is_empty() {
        return Err(AppError::Numerical(
            "no criterion produced a valid selection".into(),
        ));
    }
    Ok(())
}

fn cmd_simulate(
    common: &CommonOpts,
    trials: Option<usize>,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<()> {
    let session = Session::new(common)?;
    let mut scenario = session
        .config
        .simulate
        .clone()
        .ok_or_else(|| AppError::Validation("config needs a [simulate] section".into()))?;
    if let Some(t) = trials {
        scenario.trials = t;
    }
    if let Some(s) = seed {
        scenario.seed = s;
    }
    scenario.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| AppError::io(out_dir, e))?;

    // flush after each contamination rate so interrupted runs leave usable
    // partial tables behind
    let files = ["rates.csv", "rates.json", "plot_data.csv"];
    let mut table = RateTable { rows: Vec::new() };
    let workers = session.workers(common);
    for k in 0..scenario.contamination_rates.len() {
        match run_scenario_rate(&scenario, k, workers) {
            Ok(chunk) => {
                table.rows.extend(chunk.rows);
                write_outputs(out_dir, &table)?;
                let done = k + 1 == scenario.contamination_rates.len();
                write_manifest(out_dir, &files, done, (!done).then_some("run in progress"))?;
            }
            Err(e) => {
                write_manifest(
                    out_dir,
                    &files,
                    false,
                    Some(&format!("aborted at rate index {k}: {e}")),
                )?;
                return Err(e);
            }
        }
    }
    Ok(())
}

fn write_outputs(out_dir: &Path, table: &RateTable) -> Result<()> {
    write_rate_table_csv(&out_dir.join("rates.csv"), table)?;
    write_json(&out_dir.join("rates.json"), table)?;
    write_plot_data_csv(&out_dir.join("plot_data.csv"), table)
}

fn cmd_analyze(
    common: &CommonOpts,
    repetitions: Option<usize>,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<()> {
    let session = Session::new(common)?;
    let mut config = session
        .config
        .analyze
        .clone()
        .ok_or_else(|| AppError::Validation("config needs an [analyze] section".into()))?;
    if let Some(r) = repetitions {
        config.repetitions = r;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(resp) = &common.response {
        config.response = resp.clone();
    }
    config.validate()?;
    let (table, _) = session.load_table(&CommonOpts {
        response: Some(config.response.clone()),
        ..common.clone()
    })?;

    let report = run_realdata(&table, &config, session.workers(common))?;
    std::fs::create_dir_all(out_dir).map_err(|e| AppError::io(out_dir, e))?;
    write_realdata_csv(&out_dir.join("report.csv"), &report)?;
    write_json(&out_dir.join("report.json"), &report)?;
    write_manifest(out_dir, &["report.csv", "report.json"], true, None)
}
