//! Integrate the deterministic mean-field ODE and check step halving.

use cpal::dynamics::{g_map, integrate, mean_field_rhs, sup_norm};
use cpal::fixtures;

fn main() -> cpal::Result<()> {
    let t = fixtures::multiplicity_tree();
    let beta = 50.0;
    for v0 in [[2.0, 0.0], [0.0, 1.0], [0.5, 0.5]] {
        let tr = integrate(&v0, &t, beta, 40.0, 0.01)?;
        let end = tr.last().unwrap();
        let half = integrate(&v0, &t, beta, 40.0, 0.005)?;
        println!(
            "from {:?}: v(40) = ({:.6}, {:.6}), |F| = {:.1e}, halving changes it by {:.1e}",
            v0,
            end[0],
            end[1],
            sup_norm(&mean_field_rhs(end, &t, beta)),
            end.dist(half.last().unwrap()),
        );
    }
    println!("g at (1, 0): {:?}", g_map(&[1.0, 0.0], &t, beta).to_vec());
    Ok(())
}
