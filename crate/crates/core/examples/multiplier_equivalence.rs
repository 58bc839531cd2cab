//! The quantities behind uniform boundedness of `T_{w,σ}`: square-function
//! norms under rescaled weights, the positive operator and the joint constants.

use dyadic_weights::factory::random_doubling_weight;
use dyadic_weights::norms::SamplingBudget;
use dyadic_weights::verify::verify_haar_multiplier_equivalence;
use dyadic_weights::DyadicTree;

fn main() -> dyadic_weights::Result<()> {
    let tree = DyadicTree::new(4)?;
    for seed in 1..=3 {
        let u = random_doubling_weight(3 * seed, 0.5, tree)?;
        let v = random_doubling_weight(3 * seed + 1, 0.5, tree)?;
        let w = random_doubling_weight(3 * seed + 2, 0.5, tree)?;
        let r = verify_haar_multiplier_equivalence(&u, &v, &w, SamplingBudget::default(), &format!("seed-{seed}"))?;
        println!(
            "seed {seed}: sup_σ‖T_w,σ‖ = {:.5} ({:?})",
            r.sigma_sup.value, r.sigma_sup.method
        );
        println!(
            "  ‖S_w‖ uw²→vw² {:.5}, v⁻¹→u⁻¹ {:.5}, ‖P_w,λ‖ {:.5}",
            r.square_function_weighted, r.square_function_dual, r.positive_operator
        );
        println!(
            "  C1 {:.4} C2 {:.4} C3 {:.4}  bound {:.5}  ratio {:.4}",
            r.c1, r.c2, r.c3, r.bound, r.ratio
        );
        println!(
            "  qMax {:.4} rMax {:.4}  identities pass: {}",
            r.q_max,
            r.r_max,
            r.identities.iter().all(|v| v.pass)
        );
    }
    Ok(())
}
