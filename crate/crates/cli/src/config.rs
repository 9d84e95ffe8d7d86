use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use workstats::oracle::SystemSpec;
use workstats::protocol::ProtocolSpec;
use workstats::relaxation::ModelSpec;
use workstats::statistics::sweep::log_grid;
use workstats::statistics::{StatsConfig, ThermalParams};

pub const SCHEMA_VERSION: u32 = 1;
pub const SEED_ENV: &str = "WORKSTATS_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// A value grid: explicit values or `n` log-spaced points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Log { log_min: f64, log_max: f64, n: usize },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Log { log_min, log_max, n } => log_grid(*log_min, *log_max, *n),
        }
    }

    fn check(&self, name: &str) -> Result<(), ConfigError> {
        let pts = self.points();
        if pts.is_empty() {
            return Err(ConfigError::Invalid(format!("grid `{name}` is empty")));
        }
        if let Grid::Log { log_min, log_max, .. } = self {
            if !(*log_min > 0.0 && log_max > log_min) {
                return Err(ConfigError::Invalid(format!(
                    "grid `{name}` needs 0 < log_min < log_max"
                )));
            }
        }
        if pts.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(ConfigError::Invalid(format!(
                "grid `{name}` must contain positive finite values"
            )));
        }
        Ok(())
    }
}

/// Temperatures and ramp durations for the Fano-factor sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// βħγ values.
    pub x: Grid,
    /// γτ values.
    pub y: Grid,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_beta() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub derivative_rel_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: Option<ModelSpec>,
    pub protocol: Option<ProtocolSpec>,
    pub thermal: Option<ThermalParams>,
    pub sweep: Option<SweepConfig>,
    #[serde(default = "default_orders")]
    pub cumulant_orders: Vec<u32>,
    #[serde(default = "default_eta_grid")]
    pub eta_grid: Vec<f64>,
    pub system: Option<SystemSpec>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_identity_systems")]
    pub identity_systems: usize,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerance: Tolerances,
    #[serde(default)]
    pub seed: u64,
}

fn default_orders() -> Vec<u32> {
    vec![1, 2, 3, 4]
}

fn default_eta_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn default_alphas() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.02]
}

fn default_identity_systems() -> usize {
    20
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(s) = &self.sweep {
            s.x.check("sweep.x")?;
            s.y.check("sweep.y")?;
        }
        if self.cumulant_orders.is_empty() || self.cumulant_orders.contains(&0) {
            return Err(ConfigError::Invalid(
                "cumulant_orders must be nonempty and start at 1".into(),
            ));
        }
        if self.eta_grid.is_empty() {
            return Err(ConfigError::Invalid("eta_grid is empty".into()));
        }
        if self.alphas.is_empty()
            || self.alphas.iter().any(|&a| !(a > 0.0 && a <= 0.5))
            || self.alphas.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(ConfigError::Invalid(
                "alphas must be nonempty, strictly descending and within (0, 0.5]".into(),
            ));
        }
        if let Some(p) = &self.output {
            check_writable(p)?;
        }
        Ok(())
    }

    /// Applies the seed environment override.
    pub fn with_env_seed(mut self) -> Result<Self, ConfigError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("{SEED_ENV} must be a u64, got {v:?}")))?;
        }
        Ok(self)
    }

    pub fn stats_config(&self) -> StatsConfig {
        let mut c = StatsConfig::default();
        if let Some(t) = self.tolerance.rel_tol {
            c.rel_tol = t;
        }
        if let Some(t) = self.tolerance.abs_tol {
            c.abs_tol = t;
        }
        if let Some(t) = self.tolerance.derivative_rel_tol {
            c.derivative.rel_tol = t;
        }
        c
    }

    /// SHA-256 of the effective configuration, after overrides.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T, ConfigError> {
        field
            .as_ref()
            .ok_or_else(|| ConfigError::Schema {
                path: name.to_string(),
                message: "missing field required by this command".into(),
            })
    }
}

pub fn check_writable(path: &Path) -> Result<(), ConfigError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(ConfigError::Invalid(format!(
            "output directory {} does not exist",
            parent.display()
        )));
    }
    Ok(())
}
