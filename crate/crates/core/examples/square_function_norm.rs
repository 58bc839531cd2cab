//! Two-weight norm of the weighted square function against its upper and lower bounds.

use dyadic_weights::characteristics::{restricted_a2w, triple_constants};
use dyadic_weights::factory::random_doubling_weight;
use dyadic_weights::norms::square_function_norm;
use dyadic_weights::verify::testing_ratio;
use dyadic_weights::DyadicTree;

fn main() -> dyadic_weights::Result<()> {
    let tree = DyadicTree::new(6)?;
    for seed in 0..5 {
        let u = random_doubling_weight(3 * seed, 0.5, tree)?;
        let v = random_doubling_weight(3 * seed + 1, 0.5, tree)?;
        let w = random_doubling_weight(3 * seed + 2, 0.5, tree)?;
        let norm = square_function_norm(&u, &v, &w)?;
        let c = triple_constants(&u, &v, &w)?;
        let upper = c.sufficiency_c1.unwrap().sqrt() + 2.0 * c.sufficiency_c2.unwrap().sqrt();
        let restricted = restricted_a2w(&u.product(&w.recip())?, &v.product(&w.recip())?, &w)?;
        let (testing, _) = testing_ratio(&u, &v, &w)?;
        println!(
            "seed {seed}: ‖S_w‖ = {:.5} ({} its)  upper {upper:.5}  lower √Ã2 {:.5}, √C2 {:.5}, testing {testing:.5}",
            norm.value,
            norm.iterations,
            restricted.sqrt(),
            c.sufficiency_c2.unwrap().sqrt(),
        );
    }
    Ok(())
}
