//! One TOML config file per run, with subcommand-specific sections and a
//! handful of command-line overrides. Unknown fields fail fast with the
//! offending field path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use robsel_core::criteria::{CriteriaConfig, CriterionKind};
use robsel_core::selection::{InitialEstimator, SelectConfig};
use robsel_core::WeightScheme;

use crate::error::{AppError, Result};
use crate::realdata::RealDataConfig;
use crate::sim::SimScenario;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<DataConfig>,
    pub model: Option<ModelConfig>,
    pub simulate: Option<SimScenario>,
    pub analyze: Option<RealDataConfig>,
    /// Worker-thread count for the harness commands (default: all cores).
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub csv: PathBuf,
    pub response: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Fixed error variance; omitted means "estimate from a uniform LASSO
    /// fit" where supported.
    #[serde(default)]
    pub sigma2: Option<f64>,
    #[serde(default)]
    pub weights: WeightsChoice,
    /// Single-fit regularization level (fit subcommand).
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_grid_length")]
    pub grid_length: usize,
    #[serde(default = "default_s_hint")]
    pub s_hint: usize,
    #[serde(default = "default_criteria")]
    pub criteria: Vec<CriterionKind>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default)]
    pub lambda_init: Option<f64>,
    #[serde(default)]
    pub max_model_size: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            alpha: default_alpha(),
            sigma2: None,
            weights: WeightsChoice::default(),
            lambda: None,
            grid_length: default_grid_length(),
            s_hint: default_s_hint(),
            criteria: default_criteria(),
            gamma: default_gamma(),
            zeta: default_zeta(),
            lambda_init: None,
            max_model_size: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightsChoice {
    Uniform,
    #[default]
    Scad,
}

fn default_alpha() -> f64 {
    0.1
}
fn default_grid_length() -> usize {
    50
}
fn default_s_hint() -> usize {
    5
}
fn default_criteria() -> Vec<CriterionKind> {
    vec![CriterionKind::GedbbcPractical]
}
fn default_gamma() -> f64 {
    0.5
}
fn default_zeta() -> f64 {
    2.0
}

impl ModelConfig {
    pub fn criteria_config(&self) -> CriteriaConfig {
        CriteriaConfig {
            gamma: self.gamma,
            zeta: self.zeta,
        }
    }

    /// Selection settings for a dataset of n rows and p columns. The
    /// initial-fit level defaults to sqrt(log P / n).
    pub fn select_config(&self, n: usize, p: usize) -> SelectConfig {
        let lambda_init = self
            .lambda_init
            .unwrap_or_else(|| ((p as f64).ln().max(1.0) / n as f64).sqrt());
        SelectConfig {
            criteria: self.criteria_config(),
            max_model_size: self.max_model_size,
            initial: InitialEstimator::UniformLasso {
                lambda_init: Some(lambda_init),
            },
            ..SelectConfig::default()
        }
    }

    pub fn weight_scheme(&self, n: usize, lambda_ref: f64) -> WeightScheme {
        match self.weights {
            WeightsChoice::Uniform => WeightScheme::Uniform,
            WeightsChoice::Scad => WeightScheme::scad_default(n, lambda_ref),
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let de = toml::Deserializer::parse(&text)
        .map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        AppError::Validation(format!(
            "{}: field '{}': {}",
            path.display(),
            e.path(),
            e.inner()
        ))
    })
}
