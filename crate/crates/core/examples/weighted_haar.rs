//! The weighted Haar basis: coefficients, Parseval and the change-of-weight decomposition.

use dyadic_weights::dyadic::weighted_average;
use dyadic_weights::haar::{decompose, haar_coefficients, haar_vector};
use dyadic_weights::{DyadicIndex, DyadicTree, StepFunction, StepWeight};

fn main() -> dyadic_weights::Result<()> {
    let tree = DyadicTree::new(4)?;
    let omega = StepWeight::from_fn(tree, |k| 1.0 + (k % 5) as f64)?;
    let root = haar_vector(&omega, &DyadicIndex::ROOT)?;
    println!(
        "h_root: {:+.5} on the right half, {:+.5} on the left",
        root.plus_value, root.minus_value
    );

    let f = StepFunction::from_fn(tree, |k| (k as f64 * 0.7).sin())?;
    let coefficients = haar_coefficients(&f, &omega)?;
    let energy: f64 = coefficients.iter().map(|c| c * c).sum();
    let mean = weighted_average(&f, &omega, &DyadicIndex::ROOT)?;
    println!(
        "‖f‖²_ω = {:.12}, Σ|⟨f,h⟩|² + ⟨f⟩²ω([0,1)) = {:.12}",
        f.norm_sq(&omega),
        energy + mean * mean * omega.mass(&DyadicIndex::ROOT)?
    );

    let nu = StepWeight::ones(tree);
    for i in tree.non_leaf().take(3) {
        let d = decompose(&omega, &nu, &i)?;
        println!("{i}: h^ω = {:.5}·h + {:+.5}·𝟙", d.alpha, d.beta);
    }
    Ok(())
}
