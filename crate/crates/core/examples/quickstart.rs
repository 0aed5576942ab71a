// One federated run with default settings, printed round by round.
//
//     cargo run --example quickstart

use fedsel::{run_experiment, ExperimentConfig, Strategy};

pub fn run() -> fedsel::Result<()> {
    let config = ExperimentConfig {
        strategy: Strategy::Rbff {
            normalize_reputation: false,
        },
        rounds: 20,
        ..Default::default()
    };
    println!(
        "{} clients, {} selected per round, strategy {}",
        config.num_clients,
        config.cohort_size(),
        config.strategy
    );

    let records = run_experiment(&config)?;
    println!("round  accuracy    loss     jfi  time_ks");
    for r in &records {
        println!(
            "{:>5}  {:>8.4}  {:>6.4}  {:>6.4}  {:>7.3}",
            r.round,
            r.global_accuracy,
            r.global_loss,
            r.jfi,
            r.cumulative_time_s / 1000.0
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fedsel::Result<()> {
    run()
}
