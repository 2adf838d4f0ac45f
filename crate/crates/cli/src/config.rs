//! Experiment configuration files.
//!
//! ```json
//! {
//!   "experiment": "flatness",
//!   "model": { "name": "isojet-perturbed", "eps": 1.0 },
//!   "seed": 42,
//!   "sample_count": 20,
//!   "tolerances": { "curvature": 1e-4 },
//!   "output": "reports",
//!   "format": "json"
//! }
//! ```
//!
//! Only `experiment` and `model.name` are required. Unknown keys, model
//! names and experiment names are rejected before any computation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::{experiments, registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// A model name with its optional parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    /// Strength of the perturbed metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Twist `c` of the plane-frame form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<f64>,
    /// Bracket on the model space used for classical curvature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<String>,
    /// Half width of the sampling box for pair and translation models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

impl ModelSpec {
    pub fn named(name: impl Into<String>) -> Self {
        Self { name: name.into(), eps: None, twist: None, bracket: None, half_width: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub model: ModelSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn default_seed() -> u64 {
    42
}

impl ExperimentConfig {
    pub fn new(experiment: impl Into<String>, model: ModelSpec) -> Self {
        Self {
            experiment: experiment.into(),
            model,
            seed: default_seed(),
            sample_count: None,
            tolerances: BTreeMap::new(),
            output: None,
            format: Format::Json,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.sample_count = Some(n);
        self
    }

    pub fn from_json(text: &str) -> LabResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks names, parameters and the experiment/model pairing.
    pub fn validate(&self) -> LabResult<()> {
        let exp = experiments::find(&self.experiment)
            .ok_or_else(|| LabError::Config(format!("unknown experiment `{}`", self.experiment)))?;
        let kind = registry::kind_of(&self.model.name)
            .ok_or_else(|| LabError::Config(format!("unknown model `{}`", self.model.name)))?;
        registry::check_params(&self.model, kind)?;
        if !exp.accepts(kind) {
            return Err(LabError::Config(format!(
                "experiment `{}` does not apply to model `{}`",
                self.experiment, self.model.name
            )));
        }
        if self.sample_count == Some(0) {
            return Err(LabError::Config("sample_count must be positive".into()));
        }
        for (name, tol) in &self.tolerances {
            if !(tol.is_finite() && *tol >= 0.0) {
                return Err(LabError::Config(format!("tolerance `{name}` must be a non-negative number")));
            }
            if !exp.checks.contains(&name.as_str()) {
                return Err(LabError::Config(format!(
                    "experiment `{}` has no check named `{name}`",
                    self.experiment
                )));
            }
        }
        Ok(())
    }
}
