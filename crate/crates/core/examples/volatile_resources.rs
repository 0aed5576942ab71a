// Per-round resource draws and modeled round times. Static runs reuse one
// draw for every round; volatile runs redraw each client every round.
//
//     cargo run --example volatile_resources

use fedsel::federation::round_time;
use fedsel::{ClientId, ExperimentConfig, Federation, Volatility};

pub fn run() -> fedsel::Result<()> {
    for volatility in [Volatility::Static, Volatility::Volatile] {
        let fed = Federation::new(ExperimentConfig {
            volatility,
            ..Default::default()
        })?;
        let sizes = fed.partition().sizes();
        let everyone: Vec<ClientId> = (0..3).map(ClientId).collect();
        println!("{volatility:?}");
        for round in 1..=3 {
            let env = fed.environment(round);
            let p = &env.profiles[0];
            let t = round_time(&everyone, &env, &sizes, 1, fed.model_size_bits());
            println!(
                "  round {round}: client 0 comp {:.1} samples/s, comm {:.0} bits/s; clients 0-2 round time {t:.2}s",
                p.comp_speed, p.comm_speed
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> fedsel::Result<()> {
    run()
}
