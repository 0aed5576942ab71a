//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.
//!
//! ```text
//! cargo test --release --test acceptance
//! ```

mod common;

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use fedsel::config::{DatasetSource, PartitionScheme, SpeedRange, Strategy, Volatility};
use fedsel::data::{self, DataError, Dataset};
use fedsel::experiment::{self, SweepOptions, SweepSpec};
use fedsel::model::{self, ModelParams, ModelSpec};
use fedsel::selection::{self, ResourceProfile, StrategyConfig};
use fedsel::{derive_stream, metrics, run_experiment, ExperimentConfig, RoundRecord, SelectionLedger};
use rand::Rng;

const SEEDS: u64 = 20;

const RBFF: Strategy = Strategy::Rbff {
    normalize_reputation: false,
};
const RBCSF: Strategy = Strategy::Rbcsf {
    alpha: None,
    normalize_reputation: false,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Final records of default-config runs, memoized across criteria.
#[derive(Default)]
struct Runs {
    cache: HashMap<String, RoundRecord>,
}

impl Runs {
    fn last(&mut self, config: &ExperimentConfig) -> RoundRecord {
        let key = config.to_json();
        if let Some(r) = self.cache.get(&key) {
            return r.clone();
        }
        let record = run_experiment(config).expect("run").pop().expect("rounds");
        self.cache.insert(key, record.clone());
        record
    }

    fn seeds(&mut self, strategy: Strategy, volatility: Volatility) -> Vec<RoundRecord> {
        (0..SEEDS)
            .map(|seed| self.last(&paper_config(strategy, volatility, seed)))
            .collect()
    }
}

/// N = 50, ratio 0.4, T = 50, 200 samples per client, softmax model.
fn paper_config(strategy: Strategy, volatility: Volatility, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        strategy,
        volatility,
        seed,
        ..Default::default()
    }
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn jfis(records: &[RoundRecord]) -> Vec<f64> {
    records.iter().map(|r| r.jfi).collect()
}

fn c1_greedy_floor(runs: &mut Runs) -> Verdict {
    let start = Instant::now();
    let comp = runs.last(&paper_config(Strategy::CompGreedy, Volatility::Static, 0));
    let comm = runs.last(&paper_config(Strategy::CommGreedy, Volatility::Static, 0));
    let elapsed = start.elapsed();
    let ok = (comp.jfi - 0.4).abs() <= 1e-9 && (comm.jfi - 0.4).abs() <= 1e-9;
    verdict(
        ok && elapsed < Duration::from_secs(10),
        format!(
            "comp_greedy jfi={:.12} comm_greedy jfi={:.12}, {:.2}s for both runs",
            comp.jfi,
            comm.jfi,
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_random_fairness(runs: &mut Runs) -> Verdict {
    let start = Instant::now();
    let random = runs.seeds(Strategy::Random, Volatility::Static);
    let elapsed = start.elapsed();
    let high = random.iter().filter(|r| r.jfi >= 0.95).count();
    let lo = jfis(&random).into_iter().fold(1.0, f64::min);
    verdict(
        high >= 18 && elapsed < Duration::from_secs(180),
        format!(
            "{high}/20 seeds with jfi >= 0.95 (min {lo:.4}), {:.1}s for 20 seeds",
            elapsed.as_secs_f64()
        ),
    )
}

fn c3_volatile_ordering(runs: &mut Runs) -> Verdict {
    let rbff = mean(jfis(&runs.seeds(RBFF, Volatility::Volatile)));
    let random = mean(jfis(&runs.seeds(Strategy::Random, Volatility::Volatile)));
    verdict(
        rbff >= random && rbff >= 0.98,
        format!("mean jfi rbff={rbff:.4} random={random:.4}"),
    )
}

fn c4_greedy_time(runs: &mut Runs) -> Verdict {
    let greedy = runs.seeds(Strategy::CompGreedy, Volatility::Static);
    let random = runs.seeds(Strategy::Random, Volatility::Static);
    let g = mean(greedy.iter().map(|r| r.cumulative_time_s));
    let r = mean(random.iter().map(|r| r.cumulative_time_s));
    let dominated = greedy
        .iter()
        .zip(&random)
        .filter(|(g, r)| g.cumulative_time_s <= r.cumulative_time_s)
        .count();
    verdict(
        g <= 0.85 * r && dominated == SEEDS as usize,
        format!(
            "mean time comp_greedy={:.3}ks random={:.3}ks ratio={:.3}, greedy <= random on {dominated}/20 seeds",
            g / 1000.0,
            r / 1000.0,
            g / r
        ),
    )
}

fn c5_static_gap(runs: &mut Runs) -> Verdict {
    let random = mean(jfis(&runs.seeds(Strategy::Random, Volatility::Static)));
    let rbff = mean(jfis(&runs.seeds(RBFF, Volatility::Static)));
    let rbcsf = mean(jfis(&runs.seeds(RBCSF, Volatility::Static)));
    let ok = random - rbff >= 0.03 && rbff - rbcsf >= 0.03 && rbcsf - 0.4 >= 0.03;
    verdict(
        ok,
        format!("mean jfi random={random:.4} > rbff={rbff:.4} > rbcsf={rbcsf:.4} > 0.400"),
    )
}

/// Five well-separated classes and 600 samples per client.
fn learning_config(strategy: Strategy, partition: PartitionScheme, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        strategy,
        partition,
        seed,
        dataset: DatasetSource::Synthetic {
            n_samples: 33_334,
            n_features: 20,
            n_classes: 5,
            class_separation: 3.0,
        },
        ..Default::default()
    }
}

fn final_accuracy(config: &ExperimentConfig) -> f64 {
    run_experiment(config).expect("run").last().unwrap().global_accuracy
}

fn c6_learning(notes: &mut Vec<String>) -> Verdict {
    let noniid = PartitionScheme::ClassNonIid {
        classes_per_client: 2,
    };
    let mut min_iid = 1.0f64;
    let mut below = 0;
    let mut random_below = 0;
    for seed in 0..SEEDS {
        let mut iid_greedy = 0.0;
        let mut iid_random = 0.0;
        for strategy in Strategy::all() {
            let acc = final_accuracy(&learning_config(strategy, PartitionScheme::Iid, seed));
            min_iid = min_iid.min(acc);
            match strategy {
                Strategy::CompGreedy => iid_greedy = acc,
                Strategy::Random => iid_random = acc,
                _ => {}
            }
        }
        if final_accuracy(&learning_config(Strategy::CompGreedy, noniid, seed)) < iid_greedy {
            below += 1;
        }
        if final_accuracy(&learning_config(Strategy::Random, noniid, seed)) < iid_random {
            random_below += 1;
        }
    }
    notes.push(format!(
        "C6 under random selection: non-iid below iid on {random_below}/20 seeds"
    ));
    verdict(
        min_iid >= 0.90 && below >= 16,
        format!(
            "min iid accuracy over 5 strategies x 20 seeds = {min_iid:.4}; comp_greedy non-iid below iid on {below}/20 seeds"
        ),
    )
}

fn random_instance(rng: &mut impl Rng) -> (ModelParams, Vec<f64>, Vec<usize>) {
    let spec = ModelSpec {
        n_features: rng.random_range(1..=6),
        n_classes: rng.random_range(2..=5),
        hidden_units: if rng.random_bool(0.5) { 0 } else { rng.random_range(1..=5) },
    };
    let mut params = ModelParams::zeros(spec);
    params.values.iter_mut().for_each(|w| *w = rng.random_range(-1.5..1.5));
    let n = rng.random_range(1..=8);
    let x = (0..n * spec.n_features).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y = (0..n).map(|_| rng.random_range(0..spec.n_classes)).collect();
    (params, x, y)
}

fn c7_gradients() -> Verdict {
    let mut rng = derive_stream(7, "acceptance.gradients");
    let mut worst = 0.0f64;
    let mut loss_gap = 0.0f64;
    for _ in 0..100 {
        let (params, x, y) = random_instance(&mut rng);
        let (loss, grad) = model::loss_and_gradient(&params, &x, &y).expect("valid instance");
        loss_gap = loss_gap.max((loss - naive_loss(&params, &x, &y)).abs());
        let fd = fd_gradient(&params, &x, &y, 1e-5);
        for (a, n) in grad.iter().zip(&fd) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    verdict(
        worst < 1e-4 && loss_gap < 1e-12,
        format!("worst elementwise relative error {worst:.2e}, loss vs oracle {loss_gap:.1e}"),
    )
}

fn random_profiles(rng: &mut impl Rng, n: usize) -> Vec<ResourceProfile> {
    // coarse grids make ties common
    (0..n)
        .map(|_| ResourceProfile {
            comp_speed: [50.0, 100.0, 150.0, 200.0][rng.random_range(0..4)],
            comm_speed: [1e5, 2e5, 3e5, 5e5][rng.random_range(0..4)],
        })
        .collect()
}

fn c8_oracle_equivalence() -> Verdict {
    let mut rng = derive_stream(8, "acceptance.oracle");
    let comp = SpeedRange::new(50.0, 200.0);
    let comm = SpeedRange::new(1e5, 5e5);
    let mut mismatches = Vec::new();
    let mut rounds_checked = 0;
    for instance in 0..1000 {
        let n = rng.random_range(1..=6);
        let k = rng.random_range(1..=n);
        let normalize = rng.random_bool(0.5);
        let alpha = [0.0, 0.25, 1.0, 1e4, 1e5][rng.random_range(0..5)];
        let (strategy, rule) = match rng.random_range(0..4) {
            0 => (Strategy::CompGreedy, OracleRule::Comp),
            1 => (Strategy::CommGreedy, OracleRule::Comm),
            2 => (
                Strategy::Rbff {
                    normalize_reputation: normalize,
                },
                OracleRule::Rbff { normalize },
            ),
            _ => (
                Strategy::Rbcsf {
                    alpha: Some(alpha),
                    normalize_reputation: normalize,
                },
                OracleRule::Rbcsf { normalize, alpha },
            ),
        };
        let config = StrategyConfig::resolve(&strategy, comp, comm);
        let mut ledger = SelectionLedger::new(n);
        let mut oracle_counts = vec![0u64; n];
        for round in 1..=rng.random_range(1..=4) {
            rounds_checked += 1;
            let profiles = random_profiles(&mut rng, n);
            let expected_scores: Vec<f64> = (0..n)
                .map(|i| oracle_score(rule, &profiles, &oracle_counts, i))
                .collect();
            let scores: Vec<f64> = selection::score_clients(&config, &profiles, &ledger)
                .iter()
                .map(|r| r.score)
                .collect();
            let expected = brute_force_select(&expected_scores, k);
            let mut sel_rng = derive_stream(instance, &format!("selection.round.{round}"));
            let chosen = selection::select(&config, &profiles, &ledger, k, &mut sel_rng).unwrap();
            ledger.record(&chosen);
            for id in &expected {
                oracle_counts[id.0] += 1;
            }
            let jfi = metrics::jfi(ledger.counts()).unwrap();
            if scores != expected_scores || chosen != expected || jfi != naive_jfi(&oracle_counts) {
                mismatches.push(format!("instance {instance} round {round}"));
            }
        }
        // AUC on a small tied score vector
        let m = rng.random_range(2..=8);
        let scores: Vec<f64> = (0..m).map(|_| rng.random_range(0..4) as f64 / 4.0).collect();
        let mut labels: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        if metrics::auc_binary(&scores, &labels).unwrap() != pairwise_auc(&scores, &labels) {
            mismatches.push(format!("instance {instance} auc"));
        }
    }
    verdict(
        mismatches.is_empty(),
        format!(
            "1000 instances, {rounds_checked} selection rounds, {} mismatches{}",
            mismatches.len(),
            mismatches.first().map(|m| format!(" (first: {m})")).unwrap_or_default()
        ),
    )
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn c9_determinism() -> Verdict {
    let config = paper_config(RBFF, Volatility::Volatile, 3);
    let series = || {
        let summary = experiment::run_single(&config, None).unwrap();
        experiment::emit_series(&[summary]).unwrap()
    };
    let twice = series() == series();

    let spec = SweepSpec {
        base: ExperimentConfig {
            rounds: 5,
            dataset: DatasetSource::Synthetic {
                n_samples: 1_000,
                n_features: 10,
                n_classes: 4,
                class_separation: 3.0,
            },
            ..Default::default()
        },
        strategies: Strategy::all(),
        partitions: vec![PartitionScheme::Iid, PartitionScheme::ClassNonIid { classes_per_client: 2 }],
        volatilities: vec![Volatility::Static, Volatility::Volatile],
        client_counts: vec![10],
        ratios: vec![0.3],
        seeds: Some(vec![1, 2]),
    };
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in [1, 8] {
        let out = tmp.path().join(format!("t{threads}"));
        let options = SweepOptions {
            out_dir: Some(out.clone()),
            threads: Some(threads),
            checkpoint_dir: None,
        };
        let outcome = experiment::run_sweep(&spec, &options).unwrap();
        assert!(outcome.all_succeeded());
        outputs.push(dir_files(&out));
    }
    let files = outputs[0].len();
    verdict(
        twice && outputs[0] == outputs[1],
        format!(
            "repeat run series identical: {twice}; 1 vs 8 workers: {files} files, identical: {}",
            outputs[0] == outputs[1]
        ),
    )
}

fn c10_formats() -> Verdict {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    // every byte value appears, so pixel scaling is tested at all levels
    let (rows, cols) = (4, 8);
    let n = 9;
    let pixels: Vec<u8> = (0..n * rows * cols).map(|i| (i * 7 % 256) as u8).collect();
    let features: Vec<f64> = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let ds = Dataset::new(features, labels.clone(), rows * cols, 3).unwrap();
    let images = data::encode_idx_images(&ds, rows, cols).unwrap();
    let label_bytes = data::encode_idx_labels(&labels).unwrap();
    check("image header", images[..4] == [0, 0, 8, 3] && images[4..8] == [0, 0, 0, 9]);
    check("image payload", images[16..] == pixels[..]);
    let back = data::parse_idx(&images, &label_bytes).unwrap();
    check(
        "idx round trip",
        back.features().iter().zip(ds.features()).all(|(a, b)| a.to_bits() == b.to_bits())
            && back.labels() == ds.labels(),
    );

    let tmp = tempfile::tempdir().unwrap();
    let gz = |name: &str, bytes: &[u8]| {
        let path = tmp.path().join(name);
        let mut enc = flate2::write::GzEncoder::new(fs::File::create(&path).unwrap(), flate2::Compression::default());
        enc.write_all(bytes).unwrap();
        enc.finish().unwrap();
        path
    };
    let (ip, lp) = (gz("img.gz", &images), gz("lbl.gz", &label_bytes));
    check("gzip round trip", data::load_idx(&ip, &lp).map(|d| d == back).unwrap_or(false));

    let mut bad = images.clone();
    bad[3] = 1;
    check(
        "bad magic",
        matches!(data::parse_idx(&bad, &label_bytes), Err(DataError::BadMagic { found: 0x801, .. })),
    );
    let short_labels = data::encode_idx_labels(&labels[..8]).unwrap();
    check(
        "dimension mismatch",
        matches!(
            data::parse_idx(&images, &short_labels),
            Err(DataError::DimensionMismatch { images: 9, labels: 8 })
        ),
    );
    check(
        "truncated",
        matches!(
            data::parse_idx(&images[..images.len() - 1], &label_bytes),
            Err(DataError::Truncated { expected: 304, found: 303 })
        ),
    );

    let mut records = Vec::new();
    for r in 0..3u8 {
        records.push(r * 3);
        records.extend((0..3072).map(|i| ((i + r as usize) % 256) as u8));
    }
    match data::parse_cifar10_records(&records) {
        Ok(c) => check(
            "cifar arithmetic",
            c.n_samples() == 3
                && c.n_features() == 3072
                && c.labels() == [0, 3, 6]
                && c.row(1)[0] == 1.0 / 255.0
                && c.row(2)[3071] == f64::from(((3071 + 2) % 256) as u8) / 255.0,
        ),
        Err(_) => check("cifar arithmetic", false),
    }
    check(
        "cifar truncated",
        matches!(data::parse_cifar10_records(&records[..3073 * 2 + 5]), Err(DataError::Truncated { .. })),
    );
    let mut bad_label = records.clone();
    bad_label[3073] = 10;
    check(
        "cifar label",
        matches!(
            data::parse_cifar10_records(&bad_label),
            Err(DataError::LabelOutOfRange { label: 10, .. })
        ),
    );

    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "idx round trip (plain and gzip), header errors, cifar record arithmetic".to_string()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

type Check = Box<dyn FnOnce(&mut Runs, &mut Vec<String>) -> Verdict>;

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let mut runs = Runs::default();
    let mut notes = Vec::new();
    let criteria: Vec<(&str, Check)> = vec![
        ("C1 greedy JFI floor", Box::new(|r, _| c1_greedy_floor(r))),
        ("C2 random fairness", Box::new(|r, _| c2_random_fairness(r))),
        ("C3 volatile fairness ordering", Box::new(|r, _| c3_volatile_ordering(r))),
        ("C4 greedy time advantage", Box::new(|r, _| c4_greedy_time(r))),
        ("C5 static fairness gap", Box::new(|r, _| c5_static_gap(r))),
        ("C6 learning sanity", Box::new(|_, n| c6_learning(n))),
        ("C7 gradient correctness", Box::new(|_, _| c7_gradients())),
        ("C8 oracle equivalence", Box::new(|_, _| c8_oracle_equivalence())),
        ("C9 determinism", Box::new(|_, _| c9_determinism())),
        ("C10 format fidelity", Box::new(|_, _| c10_formats())),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let v = check(&mut runs, &mut notes);
        failed += usize::from(!v.pass);
        println!("{} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }

    // rbcsf with alpha at 5% of the summed range maxima, for comparison
    let wide: Vec<f64> = (0..SEEDS)
        .map(|seed| {
            let strategy = Strategy::Rbcsf {
                alpha: Some(0.05 * (5e5 + 200.0)),
                normalize_reputation: false,
            };
            runs.last(&paper_config(strategy, Volatility::Static, seed)).jfi
        })
        .collect();
    notes.push(format!(
        "C5 with rbcsf alpha = 0.05 x (comm max + comp max): mean jfi {:.4}",
        mean(wide)
    ));
    for note in notes {
        println!("note {note}");
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
