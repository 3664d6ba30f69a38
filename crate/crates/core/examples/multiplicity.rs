//! Find every equilibrium of a tree and report its local stability.

use cpal::equilibrium::{find_all, MultiStart};
use cpal::fixtures;
use cpal::stability::report;

fn main() -> cpal::Result<()> {
    for (name, t) in [
        ("multiplicity", fixtures::multiplicity_tree()),
        ("unique mixed", fixtures::unique_mixed_tree()),
        ("unique pure", fixtures::unique_pure_tree()),
    ] {
        let beta = 50.0;
        let eqs = find_all(&t, beta, &MultiStart::default())?;
        println!("{name}: {} equilibria at beta {beta}", eqs.len());
        for e in &eqs {
            let r = report(&e.v_star, &t, beta)?;
            println!(
                "  ({:.5}, {:.5})  {:?}  abscissa {:+.4}  {}",
                e.v_star[0], e.v_star[1], e.classification, r.spectral_abscissa, r.verdict
            );
        }
    }
    Ok(())
}
