//! Haar multipliers `T^t_{w,σ}`: a single sign pattern and the supremum over all patterns.

use dyadic_weights::factory::power_weight;
use dyadic_weights::norms::{haar_multiplier_norm, uniform_sigma_norm, SamplingBudget};
use dyadic_weights::operators::{HaarMultiplier, SignPattern};
use dyadic_weights::{DyadicTree, StepFunction, StepWeight};

fn main() -> dyadic_weights::Result<()> {
    let tree = DyadicTree::new(1)?;
    let w = StepWeight::new(tree, vec![1.0, 3.0])?;
    let f = StepFunction::new(tree, vec![0.0, 4.0])?;
    println!("T_w f = {:?}", HaarMultiplier::t_w(w).apply(&f)?.leaves());

    let tree = DyadicTree::new(4)?;
    let w = power_weight(0.5, tree)?;
    let u = StepWeight::ones(tree);
    for t in [0.0, 0.5, 1.0] {
        let single = haar_multiplier_norm(&HaarMultiplier::new(w.clone(), t, SignPattern::all_plus(tree))?, &u, &u)?;
        let (sup, pattern) = uniform_sigma_norm(&w, t, &u, &u, SamplingBudget::default())?;
        println!(
            "t = {t}: ‖T(all+)‖ = {:.5}, sup_σ = {:.5} ({:?}), maximiser {}",
            single.value,
            sup.value,
            sup.method,
            serde_json::to_string(&pattern.to_spec())?
        );
    }
    Ok(())
}
