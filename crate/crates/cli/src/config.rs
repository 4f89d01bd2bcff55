//! Experiment configuration: one JSON file drives generation, fitting,
//! scoring, and replication. CLI flags override individual fields.

use sess_core::factorcore::CriterionVariant;
use sess_core::matio::MatrixFormat;
use sess_core::simgen::{Sim1Config, Sim2Config};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sess,
    LassoBaseline,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Sess => write!(f, "sess"),
            Method::LassoBaseline => write!(f, "lasso_baseline"),
        }
    }
}

/// File format selector mirrored into serde for the `files` generator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    #[default]
    Csv,
    Tsv,
}

impl From<FileFormat> for MatrixFormat {
    fn from(f: FileFormat) -> Self {
        match f {
            FileFormat::Csv => MatrixFormat::Csv,
            FileFormat::Tsv => MatrixFormat::Tsv,
        }
    }
}

/// Data source for each replication. Seeds come from the runner
/// (`base_seed + replication index`); a `seed` field inside the generator
/// block is ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Sim1 {
        #[serde(flatten)]
        cfg: Sim1Config,
    },
    Sim2 {
        #[serde(flatten)]
        cfg: Sim2Config,
    },
    Var {
        q: usize,
        t_len: usize,
        r: usize,
        lag: usize,
        #[serde(default = "default_noise_scale")]
        noise_scale: f64,
    },
    Files {
        x: PathBuf,
        y: PathBuf,
        #[serde(default)]
        format: FileFormat,
        #[serde(default)]
        header: bool,
        #[serde(default)]
        c_star: Option<PathBuf>,
        #[serde(default)]
        u_star: Option<PathBuf>,
        #[serde(default)]
        r_star: Option<usize>,
        #[serde(default)]
        x_test: Option<PathBuf>,
        #[serde(default)]
        y_test: Option<PathBuf>,
    },
}

fn default_noise_scale() -> f64 {
    1.0
}

/// SESS hyperparameters; `None` falls back to the library defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SessParams {
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub omega0: Option<f64>,
    #[serde(default)]
    pub r_max: Option<usize>,
    #[serde(default)]
    pub criterion_variant: Option<CriterionVariant>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: GeneratorSpec,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub sess: SessParams,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Sess]
}
fn default_replications() -> usize {
    1
}
fn default_test_size() -> usize {
    10_000
}
fn default_threads() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.methods.is_empty() {
            return Err(ConfigError::Invalid("methods must be nonempty".into()));
        }
        if self.replications == 0 {
            return Err(ConfigError::Invalid("replications must be >= 1".into()));
        }
        if self.threads == 0 {
            return Err(ConfigError::Invalid("threads must be >= 1".into()));
        }
        if let GeneratorSpec::Files { x, y, .. } = &self.generator {
            for path in [x, y] {
                if !path.exists() {
                    return Err(ConfigError::Invalid(format!(
                        "input file does not exist: {}",
                        path.display()
                    )));
                }
            }
        }
        if let GeneratorSpec::Var { q, t_len, r, lag, .. } = &self.generator {
            if *q == 0 || *lag == 0 || *t_len <= *lag || *r == 0 {
                return Err(ConfigError::Invalid(
                    "var generator needs q >= 1, r >= 1, lag >= 1, t_len > lag".into(),
                ));
            }
        }
        Ok(())
    }
}
