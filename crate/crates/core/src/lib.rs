//! Deterministic simulation of federated learning client selection in
//! volatile edge environments.
//!
//! A run partitions a dataset over `N` simulated clients, samples per-round
//! computation and communication speeds, selects a cohort with one of five
//! strategies (random, computation-greedy, communication-greedy, RBFF,
//! RBCSF), trains the selected clients locally with mini-batch SGD and
//! aggregates their models with FedAvg. Every round produces a
//! [`RoundRecord`] with the modeled wall time, test accuracy, Jain's
//! fairness index over cumulative selection counts, and one-vs-rest AUCs.
//!
//! All randomness is drawn from named substreams ([`rng::derive_stream`]),
//! so two strategies run on the same seed observe identical partitions and
//! identical resource draws.
//!
//! ```no_run
//! use fedsel::{run_experiment, ExperimentConfig, Strategy};
//!
//! let config = ExperimentConfig {
//!     strategy: Strategy::Rbff { normalize_reputation: false },
//!     ..ExperimentConfig::default()
//! };
//! let records = run_experiment(&config).unwrap();
//! println!("final JFI {:.3}", records.last().unwrap().jfi);
//! ```
//!
//! The `examples/` directory has one runnable program per capability.

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod federation;
pub mod ledger;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod selection;

pub use config::{
    cohort_size, DatasetSource, ExperimentConfig, PartitionScheme, SpeedRange, Strategy,
    Volatility,
};
pub use data::{Dataset, Partition};
pub use error::{Error, Result};
pub use experiment::{run_sweep, RunSummary, SweepOptions, SweepOutcome, SweepSpec};
pub use federation::{run_experiment, EnvironmentState, Federation, RoundRecord, RunOptions};
pub use ledger::{ClientId, SelectionLedger};
pub use model::{ModelParams, ModelSpec};
pub use rng::{derive_stream, RngStream};
pub use selection::{ResourceProfile, StrategyConfig};
