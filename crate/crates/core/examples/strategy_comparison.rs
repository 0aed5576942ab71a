// All five selection strategies on the same seed, under static and
// volatile resources. Runs on one seed share data, partition and resource
// draws, so differences come from selection alone.
//
//     cargo run --release --example strategy_comparison

use fedsel::{run_experiment, ExperimentConfig, Strategy, Volatility};

pub fn run() -> fedsel::Result<()> {
    for volatility in [Volatility::Static, Volatility::Volatile] {
        println!("{volatility:?} resources");
        println!("  {:<12} {:>8} {:>9} {:>7}", "strategy", "accuracy", "time_ks", "jfi");
        for strategy in Strategy::all() {
            let config = ExperimentConfig {
                strategy,
                volatility,
                seed: 1,
                ..Default::default()
            };
            let last = run_experiment(&config)?.pop().expect("at least one round");
            println!(
                "  {:<12} {:>8.4} {:>9.3} {:>7.4}",
                strategy.label(),
                last.global_accuracy,
                last.cumulative_time_s / 1000.0,
                last.jfi
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fedsel::Result<()> {
    run()
}
