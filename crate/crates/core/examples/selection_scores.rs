// Scores and cohorts of the ranked strategies over a few rounds with fixed
// resources, showing how the fairness terms rotate participation.
//
//     cargo run --example selection_scores

use fedsel::config::{SpeedRange, Strategy};
use fedsel::selection::{score_clients, select};
use fedsel::{derive_stream, ResourceProfile, SelectionLedger, StrategyConfig};

pub fn run() -> fedsel::Result<()> {
    let profiles: Vec<ResourceProfile> = [(200.0, 5e5), (180.0, 4.8e5), (150.0, 4.6e5), (100.0, 4.4e5), (60.0, 4.2e5)]
        .into_iter()
        .map(|(comp_speed, comm_speed)| ResourceProfile {
            comp_speed,
            comm_speed,
        })
        .collect();
    let (comp, comm) = (SpeedRange::new(50.0, 200.0), SpeedRange::new(1e5, 5e5));

    let strategies = [
        Strategy::CompGreedy,
        Strategy::Rbff {
            normalize_reputation: false,
        },
        Strategy::Rbcsf {
            alpha: None,
            normalize_reputation: false,
        },
        Strategy::Rbcsf {
            alpha: None,
            normalize_reputation: true,
        },
    ];
    for strategy in strategies {
        let cfg = StrategyConfig::resolve(&strategy, comp, comm);
        println!("{strategy} (alpha {})", cfg.alpha);
        let mut ledger = SelectionLedger::new(profiles.len());
        for round in 1..=6 {
            let scores: Vec<String> = score_clients(&cfg, &profiles, &ledger)
                .iter()
                .map(|s| format!("{:.4e}", s.score))
                .collect();
            let mut rng = derive_stream(0, &format!("selection.round.{round}"));
            let cohort = select(&cfg, &profiles, &ledger, 2, &mut rng)?;
            ledger.record(&cohort);
            let ids: Vec<usize> = cohort.iter().map(|c| c.0).collect();
            println!("  round {round}: scores [{}] -> {ids:?}", scores.join(", "));
        }
        println!("  counts {:?}", ledger.counts());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fedsel::Result<()> {
    run()
}
