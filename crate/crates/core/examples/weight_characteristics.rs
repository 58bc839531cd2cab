//! Muckenhoupt, reverse Hölder and doubling characteristics of power weights,
//! with the local summation constants that characterise the same classes.

use dyadic_weights::characteristics::{summation_constant, CharacteristicReport, SummationMode};
use dyadic_weights::factory::power_weight;
use dyadic_weights::DyadicTree;

fn main() -> dyadic_weights::Result<()> {
    let tree = DyadicTree::new(8)?;
    println!(
        "{:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "alpha", "A2", "RH2", "Ainf", "RH1", "D", "fkp"
    );
    for alpha in [-0.9, -0.5, 0.0, 0.5, 1.0, 2.0] {
        let w = power_weight(alpha, tree)?;
        let r = CharacteristicReport::single(&w, &[2.0])?;
        let fkp = summation_constant(&w, 2.0, SummationMode::Fkp)?;
        println!(
            "{alpha:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.ap["2"], r.rhp["2"], r.a_inf, r.rh1, r.doubling, fkp
        );
    }
    Ok(())
}
