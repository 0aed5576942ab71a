// Save the final global model of a run, load it back, and evaluate it on
// the run's held-out split.
//
//     cargo run --example checkpoint

use fedsel::model::{evaluate, ModelParams};
use fedsel::{ExperimentConfig, Federation, RunOptions};

pub fn run() -> fedsel::Result<()> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("final.params");
    let config = ExperimentConfig {
        rounds: 10,
        hidden_units: 16,
        ..Default::default()
    };
    let federation = Federation::new(config)?;
    let output = federation.run(&RunOptions {
        checkpoint: Some(path.clone()),
        ..Default::default()
    })?;

    let loaded = ModelParams::load(&path)?;
    assert_eq!(loaded, output.final_params);
    let eval = evaluate(&loaded, federation.eval_set())?;
    println!(
        "{} parameters, {} bytes on disk, accuracy {:.4} (run reported {:.4})",
        loaded.len(),
        std::fs::metadata(&path)?.len(),
        eval.accuracy,
        output.records.last().expect("rounds").global_accuracy
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> fedsel::Result<()> {
    run()
}
