//! Experiment configuration: TOML file, command-line overrides, defaults.
//!
//! Resolution order is flag, then file, then default. The resolved config is
//! embedded in every summary; the worker count and output directory are left
//! out because they never change results.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SEED_ENV: &str = "BBMLAB_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

/// Every tunable, all optional; used for both the TOML file and the flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub mu: Option<f64>,
    pub x: Option<f64>,
    pub barrier: Option<f64>,
    pub count_cap: Option<u64>,
    pub node_cap: Option<u64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// `[a, b, lambda]` generation windows.
    pub windows: Option<Vec<[f64; 3]>>,
    pub lambda_grid: Option<Vec<f64>>,
    pub n_grid: Option<Vec<u64>>,
    pub t_grid: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: Overrides) -> Overrides {
        Overrides {
            mu: self.mu.or(base.mu),
            x: self.x.or(base.x),
            barrier: self.barrier.or(base.barrier),
            count_cap: self.count_cap.or(base.count_cap),
            node_cap: self.node_cap.or(base.node_cap),
            samples: self.samples.or(base.samples),
            seed: self.seed.or(base.seed),
            workers: self.workers.or(base.workers),
            windows: self.windows.or(base.windows),
            lambda_grid: self.lambda_grid.or(base.lambda_grid),
            n_grid: self.n_grid.or(base.n_grid),
            t_grid: self.t_grid.or(base.t_grid),
            out_dir: self.out_dir.or(base.out_dir),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub mu: f64,
    pub x: f64,
    pub barrier: f64,
    pub count_cap: u64,
    pub node_cap: u64,
    pub samples: u64,
    pub seed: u64,
    pub windows: Vec<[f64; 3]>,
    pub lambda_grid: Vec<f64>,
    pub n_grid: Vec<u64>,
    pub t_grid: Vec<f64>,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

fn env_seed() -> Result<Option<u64>, ConfigError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| ConfigError::Invalid { field: "seed", reason: format!("{SEED_ENV}={s:?} is not an integer") }),
        Err(_) => Ok(None),
    }
}

impl ExperimentConfig {
    pub fn resolve(command: &str, o: Overrides) -> Result<Self, ConfigError> {
        let seed = match o.seed {
            Some(s) => s,
            None => env_seed()?.unwrap_or(DEFAULT_SEED),
        };
        let cfg = ExperimentConfig {
            command: command.to_string(),
            mu: o.mu.unwrap_or(2.0),
            x: o.x.unwrap_or(0.0),
            barrier: o.barrier.unwrap_or(bbmlab::brw::DEFAULT_BARRIER),
            count_cap: o.count_cap.unwrap_or(bbmlab::brw::DEFAULT_COUNT_CAP),
            node_cap: o.node_cap.unwrap_or(bbmlab::brw::DEFAULT_NODE_CAP),
            samples: o.samples.unwrap_or(10_000),
            seed,
            windows: o.windows.unwrap_or_default(),
            lambda_grid: o.lambda_grid.unwrap_or_else(|| vec![3e-3, 1e-2]),
            n_grid: o.n_grid.unwrap_or_else(|| vec![1, 10, 100, 1000, 10_000]),
            t_grid: o.t_grid.unwrap_or_else(|| vec![2.0, 5.0, 8.0]),
            workers: o.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
            out_dir: o.out_dir.unwrap_or_else(|| PathBuf::from(".")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field, reason: &str| Err(ConfigError::Invalid { field, reason: reason.into() });
        if !(self.mu >= 2.0) {
            return bad("mu", "must be at least 2");
        }
        if !(self.barrier > 0.0) {
            return bad("barrier", "must be positive");
        }
        if !self.x.is_finite() {
            return bad("x", "must be finite");
        }
        if self.samples == 0 {
            return bad("samples", "must be positive");
        }
        if self.count_cap == 0 || self.node_cap == 0 {
            return bad("caps", "must be positive");
        }
        if self.workers == 0 {
            return bad("workers", "must be positive");
        }
        if self.lambda_grid.iter().any(|l| !(*l > 0.0)) {
            return bad("lambda_grid", "entries must be positive");
        }
        if self.t_grid.iter().any(|t| !(*t >= 0.0 && *t <= 16.0)) {
            return bad("t_grid", "entries must lie in [0, 16]");
        }
        if self.windows.iter().any(|w| !(w[0] >= 0.0 && w[1] >= w[0] && w[2] >= 0.0)) {
            return bad("windows", "need 0 ≤ a ≤ b and lambda ≥ 0");
        }
        Ok(())
    }
}
