//! Round orchestration: environment draw, selection, local training,
//! FedAvg, modeled clock and ledger update.
//!
//! Rounds are synchronous. A round lasts as long as its slowest selected
//! client needs to train `E` epochs over its shard and exchange the model:
//! `max_i (E·|D_i| / comp_i + bits / comm_i)`. Server time is zero.
//!
//! Stream labels used by a run (all under the config seed):
//!
//! | label | draws |
//! |---|---|
//! | `dataset` | synthetic pool |
//! | `split` | test holdout |
//! | `partition` | client shards |
//! | `model.init` | initial weights |
//! | `resources.round.{t}.client.{i}` | speeds (`t = 0` is the static draw) |
//! | `selection.round.{t}` | random strategy |
//! | `train.round.{t}.client.{i}` | local shuffles |
//!
//! None of them depend on the strategy, so two strategies with the same
//! seed see identical shards and identical resource draws.

use std::path::PathBuf;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DatasetSource, ExperimentConfig, PartitionScheme, Volatility};
use crate::data::{self, Dataset, Partition};
use crate::error::{Error, Result};
use crate::ledger::{ClientId, SelectionLedger};
use crate::metrics::{self, MetricsError};
use crate::model::{self, ModelParams, ModelSpec, TrainConfig};
use crate::rng::{derive_stream, uniform};
use crate::selection::{self, ResourceProfile, StrategyConfig};

/// Resource draw for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentState {
    pub round: usize,
    /// Indexed by client id.
    pub profiles: Vec<ResourceProfile>,
}

/// Everything observed in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub selected: Vec<ClientId>,
    /// Modeled latency of each selected client, same order as `selected`.
    pub client_times_s: Vec<f64>,
    pub round_time_s: f64,
    pub cumulative_time_s: f64,
    pub global_accuracy: f64,
    pub global_loss: f64,
    pub jfi: f64,
    /// NaN when the evaluation set holds a single class.
    pub auc_macro: f64,
    pub auc_micro: f64,
}

/// Per-client draw for round `round`.
fn draw_profile(config: &ExperimentConfig, round: usize, client: usize) -> ResourceProfile {
    let mut rng = derive_stream(config.seed, &format!("resources.round.{round}.client.{client}"));
    let comp_speed = uniform(&mut rng, config.comp_range.min, config.comp_range.max);
    let comm_speed = uniform(&mut rng, config.comm_range.min, config.comm_range.max);
    ResourceProfile {
        comp_speed,
        comm_speed,
    }
}

/// Speeds for `round`.
///
/// Volatile environments redraw every client independently each round.
/// Static environments return `static_profiles` (the round-0 draw) when
/// given, and otherwise draw it.
pub fn sample_environment(
    config: &ExperimentConfig,
    round: usize,
    static_profiles: Option<&[ResourceProfile]>,
) -> EnvironmentState {
    let profiles = match (config.volatility, static_profiles) {
        (Volatility::Static, Some(p)) => p.to_vec(),
        (Volatility::Static, None) => (0..config.num_clients)
            .map(|i| draw_profile(config, 0, i))
            .collect(),
        (Volatility::Volatile, _) => (0..config.num_clients)
            .map(|i| draw_profile(config, round, i))
            .collect(),
    };
    EnvironmentState { round, profiles }
}

/// Weighted mean of client models with weights `|D_i| / Σ |D_j|`.
pub fn fedavg_aggregate(updates: &[(ModelParams, usize)]) -> Result<ModelParams> {
    let (first, _) = updates.first().ok_or(Error::EmptyGroup)?;
    if updates.iter().any(|(p, _)| p.spec != first.spec || p.len() != first.len()) {
        return Err(Error::SpecMismatch);
    }
    if updates.iter().any(|&(_, n)| n == 0) {
        return Err(Error::Data(data::DataError::Malformed(
            "aggregation weight from an empty shard".into(),
        )));
    }
    let total: usize = updates.iter().map(|&(_, n)| n).sum();
    let mut values = vec![0.0; first.len()];
    for (params, n) in updates {
        let weight = *n as f64 / total as f64;
        for (acc, v) in values.iter_mut().zip(&params.values) {
            *acc += weight * v;
        }
    }
    Ok(ModelParams {
        values,
        spec: first.spec,
    })
}

/// Latency of one client: local training plus one model exchange.
pub fn client_time(
    shard_size: usize,
    profile: &ResourceProfile,
    local_epochs: usize,
    model_size_bits: u64,
) -> f64 {
    (local_epochs * shard_size) as f64 / profile.comp_speed
        + model_size_bits as f64 / profile.comm_speed
}

/// Synchronous round time: the slowest selected client.
pub fn round_time(
    selected: &[ClientId],
    env: &EnvironmentState,
    shard_sizes: &[usize],
    local_epochs: usize,
    model_size_bits: u64,
) -> f64 {
    selected
        .iter()
        .map(|id| {
            client_time(
                shard_sizes[id.0],
                &env.profiles[id.0],
                local_epochs,
                model_size_bits,
            )
        })
        .fold(0.0, f64::max)
}

/// Run-level knobs that do not change results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for client training; `None` uses the ambient pool.
    pub threads: Option<usize>,
    /// Write the final global model to this file.
    pub checkpoint: Option<PathBuf>,
}

/// Output of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<RoundRecord>,
    pub final_params: ModelParams,
    pub ledger: SelectionLedger,
}

/// A prepared federation: data split, shards, initial model and static
/// resources, ready to run.
#[derive(Debug, Clone)]
pub struct Federation {
    config: ExperimentConfig,
    strategy: StrategyConfig,
    train: Dataset,
    test: Option<Dataset>,
    partition: Partition,
    shards: Vec<Dataset>,
    spec: ModelSpec,
    initial: ModelParams,
    static_profiles: Option<Vec<ResourceProfile>>,
    model_size_bits: u64,
}

/// Load or generate the pool a config refers to.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    Ok(match &config.dataset {
        DatasetSource::Synthetic {
            n_samples,
            n_features,
            n_classes,
            class_separation,
        } => data::generate_synthetic(
            *n_samples,
            *n_features,
            *n_classes,
            *class_separation,
            &mut derive_stream(config.seed, "dataset"),
        ),
        DatasetSource::Idx { images, labels } => data::load_idx(images, labels)?,
        DatasetSource::Cifar10Binary { paths } => data::load_cifar10_binary(paths)?,
    })
}

impl Federation {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let pool = load_dataset(&config)?;
        Self::with_dataset(config, pool)
    }

    /// Build from an already loaded pool; `config.dataset` is ignored.
    pub fn with_dataset(config: ExperimentConfig, pool: Dataset) -> Result<Self> {
        config.validate()?;
        let (train, test) =
            pool.split_holdout(config.test_fraction, &mut derive_stream(config.seed, "split"))?;
        let mut rng = derive_stream(config.seed, "partition");
        let n = config.num_clients;
        let partition = match config.partition {
            PartitionScheme::Iid => data::partition_iid(&train, n, &mut rng)?,
            PartitionScheme::ClassNonIid { classes_per_client } => {
                data::partition_class_noniid(&train, n, classes_per_client, &mut rng)?
            }
            PartitionScheme::QuantitySkew { dirichlet_alpha } => {
                data::partition_quantity_skew(&train, n, dirichlet_alpha, &mut rng)?
            }
        };
        let shards = partition.shards().iter().map(|s| train.subset(s)).collect();
        let spec = ModelSpec {
            n_features: train.n_features(),
            n_classes: train.n_classes(),
            hidden_units: config.hidden_units,
        };
        let initial = model::init_params(spec, &mut derive_stream(config.seed, "model.init"));
        let model_size_bits = config
            .model_size_bits
            .unwrap_or(64 * spec.num_params() as u64);
        let static_profiles = match config.volatility {
            Volatility::Static => Some(sample_environment(&config, 0, None).profiles),
            Volatility::Volatile => None,
        };
        let strategy =
            StrategyConfig::resolve(&config.strategy, config.comp_range, config.comm_range);
        Ok(Federation {
            config,
            strategy,
            train,
            test,
            partition,
            shards,
            spec,
            initial,
            static_profiles,
            model_size_bits,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn strategy(&self) -> &StrategyConfig {
        &self.strategy
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn train_set(&self) -> &Dataset {
        &self.train
    }

    /// Held-out evaluation set, or the training pool when
    /// `test_fraction == 0`.
    pub fn eval_set(&self) -> &Dataset {
        self.test.as_ref().unwrap_or(&self.train)
    }

    pub fn shard(&self, id: ClientId) -> &Dataset {
        &self.shards[id.0]
    }

    pub fn model_spec(&self) -> ModelSpec {
        self.spec
    }

    pub fn initial_params(&self) -> &ModelParams {
        &self.initial
    }

    pub fn model_size_bits(&self) -> u64 {
        self.model_size_bits
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.config.local_epochs,
            learning_rate: self.config.learning_rate,
            batch_size: self.config.batch_size,
        }
    }

    pub fn environment(&self, round: usize) -> EnvironmentState {
        sample_environment(&self.config, round, self.static_profiles.as_deref())
    }

    pub fn run(&self, options: &RunOptions) -> Result<RunOutput> {
        let output = match options.threads {
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t.max(1))
                    .build()
                    .map_err(|e| Error::Io(std::io::Error::other(e)))?;
                pool.install(|| self.run_rounds())?
            }
            None => self.run_rounds()?,
        };
        if let Some(path) = &options.checkpoint {
            output.final_params.save(path)?;
        }
        Ok(output)
    }

    fn run_rounds(&self) -> Result<RunOutput> {
        let config = &self.config;
        let k = config.cohort_size();
        let sizes = self.partition.sizes();
        let train_cfg = self.train_config();
        let mut ledger = SelectionLedger::new(config.num_clients);
        let mut global = self.initial.clone();
        let mut clock = 0.0;
        let mut records = Vec::with_capacity(config.rounds);
        info!(
            "run: {} clients, k = {k}, {} rounds, strategy {}, {} / {}",
            config.num_clients,
            config.rounds,
            config.strategy,
            config.partition.label(),
            config.volatility.label()
        );

        for round in 1..=config.rounds {
            let record = self
                .step(round, k, &sizes, &train_cfg, &mut ledger, &mut global, &mut clock)
                .map_err(|e| e.in_round(round))?;
            debug!(
                "round {round}: acc {:.4} loss {:.4} jfi {:.4} t {:.2}s",
                record.global_accuracy, record.global_loss, record.jfi, record.round_time_s
            );
            records.push(record);
        }
        Ok(RunOutput {
            records,
            final_params: global,
            ledger,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &self,
        round: usize,
        k: usize,
        sizes: &[usize],
        train_cfg: &TrainConfig,
        ledger: &mut SelectionLedger,
        global: &mut ModelParams,
        clock: &mut f64,
    ) -> Result<RoundRecord> {
        let seed = self.config.seed;
        let env = self.environment(round);
        let mut sel_rng = derive_stream(seed, &format!("selection.round.{round}"));
        let selected = selection::select(&self.strategy, &env.profiles, ledger, k, &mut sel_rng)?;

        let broadcast = &*global;
        let updates = selected
            .par_iter()
            .map(|&id| {
                let mut rng = derive_stream(seed, &format!("train.round.{round}.client.{}", id.0));
                let trained = model::local_train(broadcast, &self.shards[id.0], train_cfg, &mut rng)?;
                Ok((trained, sizes[id.0]))
            })
            .collect::<Result<Vec<_>>>()?;
        *global = fedavg_aggregate(&updates)?;

        let client_times_s: Vec<f64> = selected
            .iter()
            .map(|id| {
                client_time(
                    sizes[id.0],
                    &env.profiles[id.0],
                    self.config.local_epochs,
                    self.model_size_bits,
                )
            })
            .collect();
        let round_time_s = client_times_s.iter().copied().fold(0.0, f64::max);
        *clock += round_time_s;
        ledger.record(&selected);

        let eval_set = self.eval_set();
        let eval = model::evaluate(global, eval_set)?;
        let (auc_macro, auc_micro) =
            match metrics::auc_multiclass(&eval.probabilities, eval.n_classes, eval_set.labels()) {
                Ok(a) => (a.macro_auc, a.micro_auc),
                Err(MetricsError::SingleClass) => (f64::NAN, f64::NAN),
                Err(e) => return Err(e.into()),
            };

        Ok(RoundRecord {
            round,
            selected,
            client_times_s,
            round_time_s,
            cumulative_time_s: *clock,
            global_accuracy: eval.accuracy,
            global_loss: eval.mean_loss,
            jfi: metrics::jfi(ledger.counts())?,
            auc_macro,
            auc_micro,
        })
    }
}

/// Run every round of `config` and return the per-round records.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RoundRecord>> {
    Ok(Federation::new(config.clone())?
        .run(&RunOptions::default())?
        .records)
}
