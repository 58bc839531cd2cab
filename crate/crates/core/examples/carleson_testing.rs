//! Carleson testing estimate: the constant `Q` measured on `ω` controls every `f` with `4Q`.

use dyadic_weights::factory::random_doubling_weight;
use dyadic_weights::sequence::CarlesonSequence;
use dyadic_weights::verify::{test_functions, verify_carleson_testing};
use dyadic_weights::DyadicTree;

fn main() -> dyadic_weights::Result<()> {
    let tree = DyadicTree::new(5)?;
    for seed in 0..5u64 {
        let sigma = random_doubling_weight(2 * seed, 0.6, tree)?;
        let omega = random_doubling_weight(2 * seed + 1, 0.6, tree)?;
        let lambda = CarlesonSequence::from_fn(tree, |i| i.length() * (1.0 + (i.heap_index() % 3) as f64))?;
        let verdict = verify_carleson_testing(&sigma, &omega, &lambda, &test_functions(tree, seed, 20), "example")?;
        println!(
            "seed {seed}: worst lhs {:.5} vs 4Q⟨f²⟩ {:.5} (Q = {:.4}) pass {}",
            verdict.lhs, verdict.rhs, verdict.context["q"], verdict.pass
        );
    }
    Ok(())
}
