//! Closed-form zero-temperature mixed equilibria of two-class trees.

use cpal::equilibrium::mixed_limit_solve;
use cpal::fixtures;

fn main() -> cpal::Result<()> {
    for (name, t, q, v) in [
        ("multiplicity", fixtures::multiplicity_tree(), 2.0 - 3f64.sqrt(), 1.0 - 1.0 / 3f64.sqrt()),
        ("unique mixed", fixtures::unique_mixed_tree(), 3f64.sqrt() - 1.0, 2.0 + 1.0 / 3f64.sqrt()),
    ] {
        let m = mixed_limit_solve(&t)?;
        println!("{name}: q = {:.15} (exact {q:.15}), v = {:.15} (exact {v:.15})", m.q, m.v);
    }
    Ok(())
}
