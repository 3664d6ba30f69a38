//! Enumerate pure valuation equilibria and build one greedily.

use cpal::equilibrium::{construct_strict_pure_ve, enumerate_pure_ve};
use cpal::fixtures;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cpal::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = fixtures::random_uniform_support(&mut rng, 3).shift_unary_payoffs(-100.0);
    let ves = enumerate_pure_ve(&t)?;
    println!("{} pure equilibria for three classes with low single-class payoffs", ves.len());
    for ve in &ves {
        let order: Vec<&str> = ve.order.iter().map(|&c| t.classes()[c].as_str()).collect();
        println!("  rank {:<8} v = {:?}  margin {:.3}  strict {}", order.join(">"), ve.valuations.to_vec(), ve.margin, ve.strict);
    }
    let built = construct_strict_pure_ve(&t)?;
    println!("greedy construction: {:?}", built.valuations.to_vec());
    Ok(())
}
