//! Experiment configuration and its JSON form.
//!
//! Keys mirror the field names of [`ExperimentConfig`]. Missing keys take
//! the defaults below (50 clients, 40% participation, 50 rounds, `E = 1`,
//! `η = 0.01`, batch 32, computation `U(50, 200)` samples/s, communication
//! `U(1e5, 5e5)` bits/s). Unknown keys are rejected.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Closed interval of speeds, written as `[min, max]` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct SpeedRange {
    pub min: f64,
    pub max: f64,
}

impl SpeedRange {
    pub const fn new(min: f64, max: f64) -> Self {
        SpeedRange { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    fn validate(&self, name: &str) -> Result<(), ConfigError> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(invalid(format!("{name} must be finite")));
        }
        if self.min <= 0.0 {
            return Err(invalid(format!("{name}.min must be > 0")));
        }
        if self.min > self.max {
            return Err(invalid(format!("{name}.min must be <= {name}.max")));
        }
        Ok(())
    }
}

impl From<[f64; 2]> for SpeedRange {
    fn from([min, max]: [f64; 2]) -> Self {
        SpeedRange { min, max }
    }
}

impl From<SpeedRange> for [f64; 2] {
    fn from(r: SpeedRange) -> Self {
        [r.min, r.max]
    }
}

fn default_classes_per_client() -> usize {
    2
}

fn default_dirichlet_alpha() -> f64 {
    0.5
}

/// How the training pool is split across clients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionScheme {
    Iid,
    ClassNonIid {
        #[serde(default = "default_classes_per_client")]
        classes_per_client: usize,
    },
    QuantitySkew {
        #[serde(default = "default_dirichlet_alpha")]
        dirichlet_alpha: f64,
    },
}

impl PartitionScheme {
    pub fn label(&self) -> &'static str {
        match self {
            PartitionScheme::Iid => "iid",
            PartitionScheme::ClassNonIid { .. } => "class_non_iid",
            PartitionScheme::QuantitySkew { .. } => "quantity_skew",
        }
    }

    pub fn defaults() -> Vec<PartitionScheme> {
        vec![
            PartitionScheme::Iid,
            PartitionScheme::ClassNonIid {
                classes_per_client: default_classes_per_client(),
            },
            PartitionScheme::QuantitySkew {
                dirichlet_alpha: default_dirichlet_alpha(),
            },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Volatility {
    /// Speeds drawn once and held for the whole run.
    Static,
    /// Speeds redrawn independently every round.
    Volatile,
}

impl Volatility {
    pub fn label(&self) -> &'static str {
        match self {
            Volatility::Static => "static",
            Volatility::Volatile => "volatile",
        }
    }
}

/// Client selection strategy as configured.
///
/// `alpha: None` for RBCSF resolves to a default scaled to the configured
/// speed ranges, see [`crate::selection::StrategyConfig::resolve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    Random,
    CompGreedy,
    CommGreedy,
    Rbff {
        #[serde(default)]
        normalize_reputation: bool,
    },
    Rbcsf {
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        normalize_reputation: bool,
    },
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::CompGreedy => "comp_greedy",
            Strategy::CommGreedy => "comm_greedy",
            Strategy::Rbff { .. } => "rbff",
            Strategy::Rbcsf { .. } => "rbcsf",
        }
    }

    /// Position in the tables' row order.
    pub fn rank(&self) -> u8 {
        match self {
            Strategy::Random => 0,
            Strategy::CompGreedy => 1,
            Strategy::CommGreedy => 2,
            Strategy::Rbff { .. } => 3,
            Strategy::Rbcsf { .. } => 4,
        }
    }

    pub fn all() -> Vec<Strategy> {
        vec![
            Strategy::Random,
            Strategy::CompGreedy,
            Strategy::CommGreedy,
            Strategy::Rbff {
                normalize_reputation: false,
            },
            Strategy::Rbcsf {
                alpha: None,
                normalize_reputation: false,
            },
        ]
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Where the sample pool comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Isotropic Gaussian blobs, see [`crate::data::generate_synthetic`].
    Synthetic {
        n_samples: usize,
        n_features: usize,
        n_classes: usize,
        class_separation: f64,
    },
    /// IDX image and label files (MNIST family). Gzip accepted.
    Idx { images: PathBuf, labels: PathBuf },
    /// CIFAR-10 binary batch files.
    Cifar10Binary { paths: Vec<PathBuf> },
}

/// After the default 10% holdout, 11 111 samples leave exactly 200 per
/// client for 50 clients.
impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic {
            n_samples: 11_111,
            n_features: 20,
            n_classes: 10,
            class_separation: 3.0,
        }
    }
}

impl DatasetSource {
    /// Class count when known without reading files.
    pub fn known_classes(&self) -> Option<usize> {
        match self {
            DatasetSource::Synthetic { n_classes, .. } => Some(*n_classes),
            DatasetSource::Cifar10Binary { .. } => Some(10),
            DatasetSource::Idx { .. } => None,
        }
    }
}

/// Every knob of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub num_clients: usize,
    pub selection_ratio: f64,
    pub rounds: usize,
    pub local_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub partition: PartitionScheme,
    pub volatility: Volatility,
    pub comp_range: SpeedRange,
    pub comm_range: SpeedRange,
    pub strategy: Strategy,
    /// Bits exchanged per round per client. `None` means 64 bits per
    /// model parameter.
    pub model_size_bits: Option<u64>,
    /// 0 trains softmax regression, otherwise one tanh hidden layer.
    pub hidden_units: usize,
    /// Fraction of the pool held out for evaluation before partitioning.
    pub test_fraction: f64,
    pub seed: u64,
    pub dataset: DatasetSource,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            num_clients: 50,
            selection_ratio: 0.4,
            rounds: 50,
            local_epochs: 1,
            learning_rate: 0.01,
            batch_size: 32,
            partition: PartitionScheme::Iid,
            volatility: Volatility::Static,
            comp_range: SpeedRange::new(50.0, 200.0),
            comm_range: SpeedRange::new(1e5, 5e5),
            strategy: Strategy::Random,
            model_size_bits: None,
            hidden_units: 0,
            test_fraction: 0.1,
            seed: 0,
            dataset: DatasetSource::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Per-round cohort size `k`.
    pub fn cohort_size(&self) -> usize {
        cohort_size(self.num_clients, self.selection_ratio)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_clients == 0 {
            return Err(invalid("num_clients must be >= 1"));
        }
        if !(self.selection_ratio > 0.0 && self.selection_ratio <= 1.0) {
            return Err(invalid("selection_ratio must be in (0, 1]"));
        }
        if self.rounds == 0 {
            return Err(invalid("rounds must be >= 1"));
        }
        if self.local_epochs == 0 {
            return Err(invalid("local_epochs must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(invalid("learning_rate must be finite and >= 0"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size must be >= 1"));
        }
        if !(self.test_fraction >= 0.0 && self.test_fraction < 1.0) {
            return Err(invalid("test_fraction must be in [0, 1)"));
        }
        if self.model_size_bits == Some(0) {
            return Err(invalid("model_size_bits must be positive"));
        }
        self.comp_range.validate("comp_range")?;
        self.comm_range.validate("comm_range")?;

        match self.partition {
            PartitionScheme::Iid => {}
            PartitionScheme::ClassNonIid { classes_per_client } => {
                if classes_per_client == 0 {
                    return Err(invalid("classes_per_client must be >= 1"));
                }
                if let Some(c) = self.dataset.known_classes() {
                    if classes_per_client > c {
                        return Err(invalid(format!(
                            "classes_per_client {classes_per_client} exceeds {c} dataset classes"
                        )));
                    }
                }
            }
            PartitionScheme::QuantitySkew { dirichlet_alpha } => {
                if !(dirichlet_alpha.is_finite() && dirichlet_alpha > 0.0) {
                    return Err(invalid("dirichlet_alpha must be finite and > 0"));
                }
            }
        }

        if let Strategy::Rbcsf { alpha: Some(a), .. } = self.strategy {
            if !(a.is_finite() && a >= 0.0) {
                return Err(invalid("rbcsf alpha must be finite and >= 0"));
            }
        }

        match &self.dataset {
            DatasetSource::Synthetic {
                n_samples,
                n_features,
                n_classes,
                class_separation,
            } => {
                if *n_classes < 2 {
                    return Err(invalid("synthetic n_classes must be >= 2"));
                }
                if *n_features == 0 {
                    return Err(invalid("synthetic n_features must be >= 1"));
                }
                if n_samples < n_classes {
                    return Err(invalid("synthetic n_samples must be >= n_classes"));
                }
                if !(class_separation.is_finite() && *class_separation >= 0.0) {
                    return Err(invalid("class_separation must be finite and >= 0"));
                }
            }
            DatasetSource::Cifar10Binary { paths } if paths.is_empty() => {
                return Err(invalid("cifar10_binary needs at least one path"));
            }
            _ => {}
        }
        Ok(())
    }
}

/// `ceil(ratio × n)` clamped to `[1, n]`.
pub fn cohort_size(num_clients: usize, selection_ratio: f64) -> usize {
    let raw = (selection_ratio * num_clients as f64).ceil();
    // 0.1 * 30 evaluates to 3.0000000000000004; do not let float noise bump the ceiling
    let trimmed = if (raw - 1.0 - selection_ratio * num_clients as f64).abs() < 1e-9 {
        raw - 1.0
    } else {
        raw
    };
    (trimmed as usize).clamp(1, num_clients.max(1))
}
