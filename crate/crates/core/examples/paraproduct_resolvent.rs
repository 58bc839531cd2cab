//! Product weights `Π(1 + b_I h_I)`, the dyadic paraproduct and the product-formula resolvent.

use dyadic_weights::factory::{extract_coefficients, fkp_product, random_fkp_coefficients};
use dyadic_weights::operators::{paraproduct, product_resolvent};
use dyadic_weights::{DyadicIndex, DyadicTree, StepFunction};

fn main() -> dyadic_weights::Result<()> {
    let tree = DyadicTree::new(5)?;
    let b = random_fkp_coefficients(7, 0.3, tree)?;
    let w = fkp_product(&b)?;
    println!(
        "mass {:.15}, leaves in [{:.4}, {:.4}]",
        w.mass(&DyadicIndex::ROOT)?,
        w.min_leaf(),
        w.max_leaf()
    );
    let back = extract_coefficients(&w)?;
    let drift = b
        .values()
        .values()
        .iter()
        .zip(back.values().values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    println!("re-extracted coefficients differ by {drift:.2e}");

    let f = StepFunction::from_fn(tree, |k| (k as f64).cos())?;
    let g = product_resolvent(b.values(), &f)?;
    let residual = &(&g - &paraproduct(b.values(), &g)?) - &f;
    let mean = f.average(&DyadicIndex::ROOT)?;
    println!(
        "(I - π_b) P_b f = f - ⟨f⟩ up to {:.2e}",
        residual.map(|x| x + mean).max_abs_diff(&StepFunction::zeros(tree))
    );
    Ok(())
}
