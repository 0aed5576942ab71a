// A small sweep written to a directory: table.csv, runs.csv, series.jsonl
// and one runs/<fingerprint>.json per run.
//
//     cargo run --release --example sweep -- /tmp/fedsel-sweep

use std::path::PathBuf;

use fedsel::config::{PartitionScheme, Strategy, Volatility};
use fedsel::{run_sweep, ExperimentConfig, SweepOptions, SweepSpec};

pub fn run_in(out: PathBuf) -> fedsel::Result<()> {
    let spec = SweepSpec {
        base: ExperimentConfig {
            rounds: 10,
            ..Default::default()
        },
        strategies: Strategy::all(),
        partitions: vec![PartitionScheme::Iid],
        volatilities: vec![Volatility::Static, Volatility::Volatile],
        client_counts: vec![50],
        ratios: vec![0.4],
        seeds: Some(vec![0, 1]),
    };
    let options = SweepOptions {
        out_dir: Some(out.clone()),
        ..Default::default()
    };
    let outcome = run_sweep(&spec, &options)?;
    println!("{} runs, {} failed, written to {}", outcome.summaries.len(), outcome.failures.len(), out.display());
    print!("{}", std::fs::read_to_string(out.join("table.csv"))?);
    Ok(())
}

pub fn run() -> fedsel::Result<()> {
    let dir = tempfile::tempdir()?;
    run_in(dir.path().to_path_buf())
}

#[allow(dead_code)]
fn main() -> fedsel::Result<()> {
    match std::env::args_os().nth(1) {
        Some(out) => run_in(out.into()),
        None => run(),
    }
}
