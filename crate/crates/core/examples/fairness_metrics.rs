// Jain's fairness index and one-vs-rest AUC on hand-made inputs.
//
//     cargo run --example fairness_metrics

use fedsel::metrics::{auc_binary, auc_multiclass, jfi};

pub fn run() -> fedsel::Result<()> {
    let greedy: Vec<u64> = [vec![50; 20], vec![0; 30]].concat();
    for (name, counts) in [
        ("equal", vec![5, 5, 5, 5]),
        ("one client", vec![7, 0, 0, 0]),
        ("1..4", vec![1, 2, 3, 4]),
        ("20 of 50 always", greedy),
    ] {
        println!("jfi {name:<16} = {:.4}", jfi(&counts)?);
    }

    let auc = auc_binary(&[0.9, 0.4, 0.6, 0.4], &[true, false, true, true])?;
    println!("binary auc with a tie = {auc}");

    // three samples, three classes, row-major probabilities
    let probs = [0.7, 0.2, 0.1, 0.3, 0.4, 0.3, 0.2, 0.2, 0.6];
    let m = auc_multiclass(&probs, 3, &[0, 1, 2])?;
    println!("macro auc {:.4}, micro auc {:.4}", m.macro_auc, m.micro_auc);
    Ok(())
}

#[allow(dead_code)]
fn main() -> fedsel::Result<()> {
    run()
}
