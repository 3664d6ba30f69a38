//! Collapse a raw decision tree into its class-set representation.

use cpal::fixtures;
use cpal::format;
use cpal::tree::reduce;

fn main() -> cpal::Result<()> {
    let raw = fixtures::bob_raw();
    println!("raw tree: {} states over classes {:?}", raw.states().len(), raw.classes());

    let t = reduce(&raw)?;
    for s in t.states() {
        let names: Vec<&str> = s.members().iter().map(|&c| t.classes()[c].as_str()).collect();
        println!("  {{{}}}  p = {:<6}  payoffs {:?}", names.join(","), s.probability().to_string(), s.payoffs());
    }
    println!("support: {:?}", t.support_profile());
    println!("payoff box: {:?}", t.payoff_box());
    println!("\n{}", format::reduced_to_json(&t));
    Ok(())
}
