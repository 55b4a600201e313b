use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slicebench_core::prompt::{ModelConfig, Strategy};
use slicebench_core::slice::{SliceMode, StructuralLines};

pub const ENV_API_BASE: &str = "SLICEBENCH_API_BASE";
pub const ENV_API_KEY: &str = "SLICEBENCH_API_KEY";
pub const ENV_MODEL: &str = "SLICEBENCH_MODEL";

fn default_runs() -> u32 {
    3
}

fn default_concurrency() -> usize {
    crate::gateway::DEFAULT_CONCURRENCY
}

fn default_experiment() -> String {
    "baseline".to_string()
}

fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

fn default_modes() -> Vec<SliceMode> {
    vec![SliceMode::Static, SliceMode::Dynamic]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    #[serde(default)]
    pub models: Vec<ModelConfig>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_modes")]
    pub modes: Vec<SliceMode>,
    #[serde(default = "default_runs")]
    pub runs: u32,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    pub output: PathBuf,
    /// Root of mock fixtures.
    #[serde(default)]
    pub fixtures: Option<PathBuf>,
    /// Fixture subdirectory for this run's mock answers.
    #[serde(default = "default_experiment")]
    pub experiment: String,
    #[serde(default)]
    pub structural_lines: StructuralLines,
    #[serde(default)]
    pub truth_cache: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid experiment config: {0}")]
    Invalid(String),
}

impl ExperimentConfig {
    /// A config with one model and the default matrix.
    pub fn new(dataset: impl Into<PathBuf>, output: impl Into<PathBuf>, models: Vec<ModelConfig>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            models,
            strategies: default_strategies(),
            modes: default_modes(),
            runs: default_runs(),
            concurrency: default_concurrency(),
            output: output.into(),
            fixtures: None,
            experiment: default_experiment(),
            structural_lines: StructuralLines::Include,
            truth_cache: None,
        }
    }

    /// Loads a config file; relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigFileError::Read { path: path.into(), message: e.to_string() })?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| ConfigFileError::Invalid(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.dataset);
        fix(&mut cfg.output);
        if let Some(f) = cfg.fixtures.as_mut() {
            fix(f);
        }
        if let Some(c) = cfg.truth_cache.as_mut() {
            fix(c);
        }
        cfg.apply_env();
        cfg.validate()?;
        Ok(cfg)
    }

    /// With no models configured, `SLICEBENCH_MODEL` and `SLICEBENCH_API_BASE`
    /// define one; the key is read from `SLICEBENCH_API_KEY` at call time.
    pub fn apply_env(&mut self) {
        if self.models.is_empty() {
            if let Ok(name) = std::env::var(ENV_MODEL) {
                let mut m = ModelConfig::for_model(&name);
                if let Ok(base) = std::env::var(ENV_API_BASE) {
                    m.endpoint = base;
                }
                m.api_key_ref = ENV_API_KEY.to_string();
                self.models.push(m);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigFileError> {
        let bad = |m: &str| Err(ConfigFileError::Invalid(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.models.is_empty() {
            return bad("no models configured (set models or SLICEBENCH_MODEL)");
        }
        if self.strategies.is_empty() || self.modes.is_empty() {
            return bad("need at least one strategy and one mode");
        }
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1");
        }
        for m in &self.models {
            m.validate().map_err(|e| ConfigFileError::Invalid(format!("{}: {e}", m.name)))?;
        }
        Ok(())
    }
}
