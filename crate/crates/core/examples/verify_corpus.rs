//! Runs every registered claim over the default corpus and prints a summary.

use dyadic_weights::norms::SamplingBudget;
use dyadic_weights::verify::{run_suite, standard_corpus, ExperimentConfig};

fn main() -> dyadic_weights::Result<()> {
    let config = ExperimentConfig::default();
    let corpus = standard_corpus(
        config.depth,
        config.seeds.0..=config.seeds.1,
        config.epsilon,
        config.include_power,
        config.include_fixtures,
    )?;
    let out = run_suite(
        &corpus,
        &config.claims()?,
        &config.tolerances()?,
        SamplingBudget::default(),
    )?;

    let mut by_claim = std::collections::BTreeMap::<&str, (usize, usize, f64)>::new();
    for v in &out.verdicts {
        let e = by_claim.entry(&v.claim_id).or_insert((0, 0, f64::INFINITY));
        e.0 += 1;
        e.1 += usize::from(!v.pass);
        e.2 = e.2.min(v.slack);
    }
    for (id, (n, failed, slack)) in by_claim {
        println!("{id:28} {n:4} checks  {failed:3} failed  min slack {slack:.3e}");
    }
    for (name, points) in &out.series {
        let max = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
        println!("series {name:24} {:4} points  max ratio {max:.4}", points.len());
    }
    Ok(())
}
