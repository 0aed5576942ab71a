// Configs are plain JSON. Missing keys take defaults and unknown keys are
// rejected.
//
//     cargo run --example config_json

use fedsel::ExperimentConfig;

pub fn run() -> fedsel::Result<()> {
    let text = r#"{
        "num_clients": 30,
        "selection_ratio": 0.2,
        "rounds": 5,
        "partition": {"kind": "quantity_skew", "dirichlet_alpha": 0.3},
        "volatility": "volatile",
        "strategy": {"kind": "rbcsf", "normalize_reputation": true},
        "seed": 7
    }"#;
    let config = ExperimentConfig::from_json_str(text)?;
    println!("{} clients, cohort {}, strategy {}", config.num_clients, config.cohort_size(), config.strategy);
    println!("full config:\n{}", config.to_json());

    let bad = ExperimentConfig::from_json_str(r#"{"num_client": 30}"#);
    println!("typo rejected: {}", bad.unwrap_err());
    let zero = ExperimentConfig::from_json_str(r#"{"selection_ratio": 0.0}"#);
    println!("bad value rejected: {}", zero.unwrap_err());

    let last = fedsel::run_experiment(&config)?.pop().expect("rounds");
    println!("after {} rounds: accuracy {:.4}, jfi {:.4}", last.round, last.global_accuracy, last.jfi);
    Ok(())
}

#[allow(dead_code)]
fn main() -> fedsel::Result<()> {
    run()
}
