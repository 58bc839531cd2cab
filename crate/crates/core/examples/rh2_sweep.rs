//! `‖S_w‖_{L²→L²}` along a family of step weights with growing reverse Hölder characteristic.

use dyadic_weights::characteristics::rhp_characteristic;
use dyadic_weights::norms::square_function_norm;
use dyadic_weights::{DyadicTree, StepWeight};

fn main() -> dyadic_weights::Result<()> {
    let tree = DyadicTree::new(6)?;
    let one = StepWeight::ones(tree);
    println!("{:>6} {:>10} {:>10}", "c", "[w]_RH2", "‖S_w‖");
    for c in [1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0] {
        // 1 on [0, 1/2), c on [1/2, 1)
        let w = StepWeight::from_fn(tree, |k| if k < tree.leaf_count() / 2 { 1.0 } else { c })?;
        let rh2 = rhp_characteristic(&w, 2.0)?;
        let norm = square_function_norm(&one, &one, &w)?.value;
        println!("{c:>6} {rh2:>10.6} {norm:>10.6}");
    }
    Ok(())
}
