//! Sweeps over strategies, partitions, volatility, federation size,
//! participation ratio and seeds, with CSV/JSONL emission.
//!
//! A sweep directory holds:
//!
//! * `runs/<fingerprint>.json`: one summary per run, written as soon as the
//!   run finishes;
//! * `table.csv`: means over seeds per (resource mode, strategy, partition);
//! * `runs.csv`: one row per run;
//! * `series.jsonl`: one line per run and round;
//! * `failures.json`: only when a cell failed.
//!
//! Final files are sorted by fingerprint, so they do not depend on the
//! number of worker threads.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, ExperimentConfig, PartitionScheme, Strategy, Volatility};
use crate::error::{Error, Result};
use crate::federation::{Federation, RoundRecord, RunOptions};

fn default_volatilities() -> Vec<Volatility> {
    vec![Volatility::Static, Volatility::Volatile]
}

fn default_client_counts() -> Vec<usize> {
    vec![10, 20, 30, 40, 50]
}

fn default_ratios() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.5]
}

/// Cartesian grid of runs around a base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub base: ExperimentConfig,
    #[serde(default = "Strategy::all")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "PartitionScheme::defaults")]
    pub partitions: Vec<PartitionScheme>,
    #[serde(default = "default_volatilities")]
    pub volatilities: Vec<Volatility>,
    #[serde(default = "default_client_counts")]
    pub client_counts: Vec<usize>,
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
    /// Defaults to `[base.seed]`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

impl SweepSpec {
    /// A single-cell sweep of `base`.
    pub fn single(base: ExperimentConfig) -> Self {
        SweepSpec {
            strategies: vec![base.strategy],
            partitions: vec![base.partition],
            volatilities: vec![base.volatility],
            client_counts: vec![base.num_clients],
            ratios: vec![base.selection_ratio],
            seeds: Some(vec![base.seed]),
            base,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let spec: SweepSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| vec![self.base.seed])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let empty = [
            ("strategies", self.strategies.is_empty()),
            ("partitions", self.partitions.is_empty()),
            ("volatilities", self.volatilities.is_empty()),
            ("client_counts", self.client_counts.is_empty()),
            ("ratios", self.ratios.is_empty()),
            ("seeds", self.seeds().is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(ConfigError::Invalid(format!("sweep list `{name}` is empty")));
        }
        self.cells().iter().try_for_each(ExperimentConfig::validate)
    }

    /// Every cell of the grid, duplicates removed, in grid order.
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for seed in self.seeds() {
            for &volatility in &self.volatilities {
                for &partition in &self.partitions {
                    for &num_clients in &self.client_counts {
                        for &selection_ratio in &self.ratios {
                            for &strategy in &self.strategies {
                                let config = ExperimentConfig {
                                    seed,
                                    volatility,
                                    partition,
                                    num_clients,
                                    selection_ratio,
                                    strategy,
                                    ..self.base.clone()
                                };
                                if seen.insert(fingerprint(&config)) {
                                    out.push(config);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// First 16 hex digits of SHA-256 over the config's JSON.
pub fn fingerprint(config: &ExperimentConfig) -> String {
    let digest = Sha256::digest(config.to_json().as_bytes());
    hex::encode(&digest[..8])
}

/// Strategy name used in tables; parameterized variants get a suffix.
pub fn strategy_name(strategy: &Strategy) -> String {
    match *strategy {
        Strategy::Rbff {
            normalize_reputation: true,
        } => "rbff_norm".into(),
        Strategy::Rbcsf {
            alpha,
            normalize_reputation,
        } => {
            let mut name = String::from("rbcsf");
            if normalize_reputation {
                name.push_str("_norm");
            }
            if let Some(a) = alpha {
                name.push_str(&format!("_a{a}"));
            }
            name
        }
        other => other.label().into(),
    }
}

/// Partition name used in tables; non-default parameters get a suffix.
pub fn partition_name(partition: &PartitionScheme) -> String {
    match *partition {
        PartitionScheme::ClassNonIid { classes_per_client } if classes_per_client != 2 => {
            format!("class_non_iid_{classes_per_client}")
        }
        PartitionScheme::QuantitySkew { dirichlet_alpha } if dirichlet_alpha != 0.5 => {
            format!("quantity_skew_{dirichlet_alpha}")
        }
        other => other.label().into(),
    }
}

/// Final metrics and per-round series of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub fingerprint: String,
    pub strategy: String,
    pub partition: String,
    pub volatility: String,
    pub final_accuracy: f64,
    pub final_loss: f64,
    pub final_jfi: f64,
    /// Cumulative modeled time in thousands of seconds.
    pub final_time_ks: f64,
    pub final_auc_macro: f64,
    pub final_auc_micro: f64,
    pub config: ExperimentConfig,
    pub rounds: Vec<RoundRecord>,
}

impl RunSummary {
    /// # Panics
    ///
    /// Panics if `records` is empty.
    pub fn new(config: ExperimentConfig, records: Vec<RoundRecord>) -> Self {
        let last = records.last().expect("at least one round").clone();
        RunSummary {
            fingerprint: fingerprint(&config),
            strategy: strategy_name(&config.strategy),
            partition: partition_name(&config.partition),
            volatility: config.volatility.label().into(),
            final_accuracy: last.global_accuracy,
            final_loss: last.global_loss,
            final_jfi: last.jfi,
            final_time_ks: last.cumulative_time_s / 1000.0,
            final_auc_macro: last.auc_macro,
            final_auc_micro: last.auc_micro,
            config,
            rounds: records,
        }
    }
}

/// A grid cell that could not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub fingerprint: String,
    pub config: ExperimentConfig,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Output directory; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Worker threads for cells and clients; `None` uses all cores.
    pub threads: Option<usize>,
    /// Final model of each run is saved here as `<fingerprint>.params`.
    pub checkpoint_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Sorted by fingerprint.
    pub summaries: Vec<RunSummary>,
    /// Sorted by fingerprint.
    pub failures: Vec<CellFailure>,
}

impl SweepOutcome {
    pub fn all_succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Run one config to completion.
pub fn run_single(config: &ExperimentConfig, checkpoint_dir: Option<&Path>) -> Result<RunSummary> {
    let federation = Federation::new(config.clone())?;
    let options = RunOptions {
        threads: None,
        checkpoint: checkpoint_dir.map(|d| d.join(format!("{}.params", fingerprint(config)))),
    };
    let output = federation.run(&options)?;
    Ok(RunSummary::new(config.clone(), output.records))
}

/// Run every cell of `spec`. Cell failures are collected, not fatal.
pub fn run_sweep(spec: &SweepSpec, options: &SweepOptions) -> Result<SweepOutcome> {
    spec.validate()?;
    let cells = spec.cells();
    info!("sweep: {} runs", cells.len());
    if let Some(dir) = &options.out_dir {
        fs::create_dir_all(dir.join("runs"))?;
    }
    if let Some(dir) = &options.checkpoint_dir {
        fs::create_dir_all(dir)?;
    }

    let appender = Mutex::new(());
    let run_cell = |config: &ExperimentConfig| -> std::result::Result<RunSummary, Box<CellFailure>> {
        let fp = fingerprint(config);
        let outcome = run_single(config, options.checkpoint_dir.as_deref()).and_then(|summary| {
            if let Some(dir) = &options.out_dir {
                let text = serde_json::to_string_pretty(&summary)?;
                let _guard = appender.lock().unwrap_or_else(|e| e.into_inner());
                fs::write(dir.join("runs").join(format!("{fp}.json")), text)?;
            }
            Ok(summary)
        });
        outcome.map_err(|e| {
            warn!("run {fp} failed: {e}");
            Box::new(CellFailure {
                fingerprint: fp,
                config: config.clone(),
                error: e.to_string(),
            })
        })
    };

    let results: Vec<_> = match options.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?
            .install(|| cells.par_iter().map(run_cell).collect()),
        None => cells.par_iter().map(run_cell).collect(),
    };

    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => summaries.push(s),
            Err(f) => failures.push(*f),
        }
    }
    summaries.sort_by(|a, b| a.fingerprint.cmp(&b.fingerprint));
    failures.sort_by(|a, b| a.fingerprint.cmp(&b.fingerprint));
    let outcome = SweepOutcome {
        summaries,
        failures,
    };
    if let Some(dir) = &options.out_dir {
        write_outputs(dir, &outcome)?;
    }
    Ok(outcome)
}

/// Write `table.csv`, `runs.csv`, `series.jsonl` and, if needed,
/// `failures.json` into `dir`.
pub fn write_outputs(dir: &Path, outcome: &SweepOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    if !outcome.summaries.is_empty() {
        fs::write(
            dir.join("table.csv"),
            emit_table(&outcome.summaries, &GroupKey::ALL)?,
        )?;
        fs::write(dir.join("runs.csv"), emit_runs_table(&outcome.summaries)?)?;
    }
    fs::write(dir.join("series.jsonl"), emit_series(&outcome.summaries)?)?;
    if !outcome.failures.is_empty() {
        fs::write(
            dir.join("failures.json"),
            serde_json::to_string_pretty(&outcome.failures)?,
        )?;
    }
    Ok(())
}

/// Columns a table can be grouped by. Ungrouped columns read `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    ResourceMode,
    Strategy,
    Partition,
}

impl GroupKey {
    pub const ALL: [GroupKey; 3] = [GroupKey::ResourceMode, GroupKey::Strategy, GroupKey::Partition];
}

pub const TABLE_COLUMNS: [&str; 8] = [
    "resource_mode",
    "strategy",
    "partition",
    "acc",
    "time_ks",
    "jfi",
    "auc_macro",
    "auc_micro",
];

fn partition_rank(p: &PartitionScheme) -> u8 {
    match p {
        PartitionScheme::Iid => 0,
        PartitionScheme::ClassNonIid { .. } => 1,
        PartitionScheme::QuantitySkew { .. } => 2,
    }
}

type RowKey = (
    Option<(Volatility, String)>,
    Option<(u8, String)>,
    Option<(u8, String)>,
);

fn fmt_value(v: f64) -> String {
    format!("{v}")
}

/// Means over runs sharing the grouped keys, one CSV row per group.
pub fn emit_table(summaries: &[RunSummary], group_by: &[GroupKey]) -> Result<String> {
    if summaries.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let mut groups: BTreeMap<RowKey, Vec<&RunSummary>> = BTreeMap::new();
    for s in summaries {
        let key = (
            group_by
                .contains(&GroupKey::ResourceMode)
                .then(|| (s.config.volatility, s.volatility.clone())),
            group_by
                .contains(&GroupKey::Strategy)
                .then(|| (s.config.strategy.rank(), s.strategy.clone())),
            group_by
                .contains(&GroupKey::Partition)
                .then(|| (partition_rank(&s.config.partition), s.partition.clone())),
        );
        groups.entry(key).or_default().push(s);
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_COLUMNS)?;
    for ((mode, strategy, partition), runs) in &groups {
        let n = runs.len() as f64;
        let mean = |f: fn(&RunSummary) -> f64| runs.iter().map(|r| f(r)).sum::<f64>() / n;
        let label = |o: Option<String>| o.unwrap_or_else(|| "all".into());
        w.write_record([
            label(mode.as_ref().map(|m| m.1.clone())),
            label(strategy.as_ref().map(|m| m.1.clone())),
            label(partition.as_ref().map(|m| m.1.clone())),
            fmt_value(mean(|r| r.final_accuracy)),
            fmt_value(mean(|r| r.final_time_ks)),
            fmt_value(mean(|r| r.final_jfi)),
            fmt_value(mean(|r| r.final_auc_macro)),
            fmt_value(mean(|r| r.final_auc_micro)),
        ])?;
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per run, in the order given.
pub fn emit_runs_table(summaries: &[RunSummary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "fingerprint",
        "seed",
        "num_clients",
        "selection_ratio",
        "resource_mode",
        "strategy",
        "partition",
        "acc",
        "time_ks",
        "jfi",
        "auc_macro",
        "auc_micro",
    ])?;
    for s in summaries {
        w.write_record([
            s.fingerprint.clone(),
            s.config.seed.to_string(),
            s.config.num_clients.to_string(),
            fmt_value(s.config.selection_ratio),
            s.volatility.clone(),
            s.strategy.clone(),
            s.partition.clone(),
            fmt_value(s.final_accuracy),
            fmt_value(s.final_time_ks),
            fmt_value(s.final_jfi),
            fmt_value(s.final_auc_macro),
            fmt_value(s.final_auc_micro),
        ])?;
    }
    into_string(w)
}

#[derive(Serialize)]
struct SeriesLine<'a> {
    fingerprint: &'a str,
    strategy: &'a str,
    partition: &'a str,
    volatility: &'a str,
    round: usize,
    loss: f64,
    accuracy: f64,
    jfi: f64,
    cum_time_s: f64,
}

/// Key order of every `series.jsonl` line.
pub const SERIES_KEYS: [&str; 9] = [
    "fingerprint",
    "strategy",
    "partition",
    "volatility",
    "round",
    "loss",
    "accuracy",
    "jfi",
    "cum_time_s",
];

/// One JSON object per (run, round), runs in the order given.
pub fn emit_series(summaries: &[RunSummary]) -> Result<String> {
    let mut out = String::new();
    for s in summaries {
        for r in &s.rounds {
            let line = SeriesLine {
                fingerprint: &s.fingerprint,
                strategy: &s.strategy,
                partition: &s.partition,
                volatility: &s.volatility,
                round: r.round,
                loss: r.global_loss,
                accuracy: r.global_accuracy,
                jfi: r.jfi,
                cum_time_s: r.cumulative_time_s,
            };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
    }
    Ok(out)
}
