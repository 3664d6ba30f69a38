//! Probe the Jacobian sign pattern as single-class payoffs grow.

use cpal::fixtures;
use cpal::stability::{probe_cooperative, probe_z_threshold};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cpal::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = fixtures::random_full_support(&mut rng, 3);
    let beta = 2.0;
    for z in [0.0, 2.0, 10.0, 100.0] {
        let p = probe_cooperative(&t.shift_unary_payoffs(z), beta, 100, 1)?;
        println!(
            "z = {z:>5}: cooperative {}  min off-diagonal {:.3e}  max abscissa {:+.6}",
            p.all_cooperative, p.min_offdiagonal, p.max_abscissa
        );
    }
    let zs: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
    println!("smallest tested shift that is cooperative everywhere: {:?}", probe_z_threshold(&t, beta, &zs, 100, 1)?);
    Ok(())
}
