//! Reduce two-class dynamics to a scalar equation in the valuation gap.

use cpal::equilibrium::reduce_1d;
use cpal::fixtures;

fn main() -> cpal::Result<()> {
    let t = fixtures::multiplicity_tree();
    for beta in [2.0, 5.0, 50.0] {
        let s = reduce_1d(&t, beta)?;
        let (lo, hi) = s.bracket();
        print!("beta {beta:>4}: gap in [{lo}, {hi}], roots");
        for r in s.roots() {
            print!("  x={:+.5} ({})", r.x, if r.stable { "stable" } else { "unstable" });
        }
        println!();
    }
    Ok(())
}
