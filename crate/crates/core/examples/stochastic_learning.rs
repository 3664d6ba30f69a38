//! Run the stochastic valuation-learning process and summarise a batch.

use cpal::dynamics::{SimConfig, Simulator, StepRule};
use cpal::fixtures;

fn main() -> cpal::Result<()> {
    let t = fixtures::unique_mixed_tree();
    let cfg = SimConfig {
        beta: 50.0,
        horizon: 20_000,
        step_rule: StepRule::Harmonic,
        seed: 7,
        record_every: 5_000,
        ..SimConfig::default()
    };
    let sim = Simulator::new(&t, cfg, None)?;

    let tr = sim.run(&[0.0, 0.0]);
    for (time, v) in tr.times.iter().zip(&tr.snapshots) {
        println!("k = {time:>6}  v = ({:.4}, {:.4})", v[0], v[1]);
    }
    println!("first events:");
    for e in tr.events.iter().take(3) {
        println!("  k={} state={} chose {} payoff {} alpha {:.3}", e.k, e.state, t.classes()[e.chosen], e.payoff, e.alpha);
    }

    let finals = sim.terminal_batch(&[0.0, 0.0], 64);
    let mean: Vec<f64> = (0..2).map(|s| finals.iter().map(|v| v[s]).sum::<f64>() / finals.len() as f64).collect();
    println!("mean terminal valuation over 64 runs: ({:.4}, {:.4})", mean[0], mean[1]);
    println!("limit 2 + 1/sqrt(3) = {:.4}", 2.0 + 1.0 / 3f64.sqrt());
    Ok(())
}
