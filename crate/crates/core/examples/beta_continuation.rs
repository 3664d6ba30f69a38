//! Track equilibria along an increasing sequence of inverse temperatures.

use cpal::equilibrium::{beta_sweep, find_all, geometric_schedule, MultiStart, SweepConfig};
use cpal::fixtures;

fn main() -> cpal::Result<()> {
    let t = fixtures::multiplicity_tree();
    let betas = geometric_schedule(10.0, 1e4, 1.5)?;
    let seeds: Vec<Vec<f64>> = find_all(&t, betas[0], &MultiStart::default())?
        .into_iter()
        .map(|e| e.v_star.to_vec())
        .collect();
    let paths = beta_sweep(&t, &betas, &seeds, &SweepConfig::default())?;
    for p in &paths {
        let first = &p.points[0];
        let last = p.last().unwrap();
        println!(
            "({:.4}, {:.4}) at beta {:.0} -> ({:.6}, {:.6}) at beta {:.0}, {:?}",
            first.v_star[0], first.v_star[1], first.beta, last.v_star[0], last.v_star[1], last.beta, p.termination
        );
    }
    Ok(())
}
