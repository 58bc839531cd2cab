//! Navigating a truncated dyadic tree and taking plain and weighted averages.

use dyadic_weights::dyadic::{weighted_average, Relation};
use dyadic_weights::{DyadicIndex, DyadicTree, StepFunction, StepWeight};

fn main() -> dyadic_weights::Result<()> {
    let tree = DyadicTree::new(3)?;
    let interval: DyadicIndex = "2,1".parse()?;
    println!(
        "{interval}: length {}, heap index {}",
        interval.length(),
        interval.heap_index()
    );
    for rel in [Relation::Parent, Relation::Sibling, Relation::Left, Relation::Right] {
        println!("  {rel:?} -> {}", tree.navigate(&interval, rel)?);
    }

    let w = StepWeight::from_fn(tree, |k| 1.0 + k as f64)?;
    let f = StepFunction::from_fn(tree, |k| if k % 2 == 0 { 1.0 } else { -1.0 })?;
    for j in tree.intervals().take(7) {
        println!(
            "{j:>5}  w(J) = {:.4}  <w>_J = {:.4}  <f>_J^w = {:+.4}",
            w.mass(&j)?,
            w.average(&j)?,
            weighted_average(&f, &w, &j)?
        );
    }
    Ok(())
}
