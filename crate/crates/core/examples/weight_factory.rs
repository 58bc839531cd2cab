//! Building weights from JSON specs and combining them with weight expressions.

use dyadic_weights::characteristics::doubling_constant;
use dyadic_weights::factory::{weight_algebra, WeightSpec};
use dyadic_weights::io::{parse_weight, weight_to_json};

fn main() -> dyadic_weights::Result<()> {
    let specs = [
        r#"{"type":"random","depth":4,"seed":11,"epsilon":0.5}"#,
        r#"{"type":"power","depth":4,"alpha":-0.5}"#,
        r#"{"type":"fkp","depth":4,"b":{"0,0":0.6,"1,1":-0.4}}"#,
        r#"{"depth":2,"leaves":[1,2,3,4]}"#,
        "const2",
    ];
    for spec in specs {
        let w = parse_weight(spec, Some(4)).or_else(|_| parse_weight(spec, None))?;
        println!(
            "{spec}\n  depth {}, D(w) = {:.4}, leaves {:.3?}",
            w.depth(),
            doubling_constant(&w),
            &w.leaves()[..4]
        );
    }

    let u = WeightSpec::Random {
        depth: 4,
        seed: 1,
        epsilon: 0.5,
    }
    .build()?;
    let v = WeightSpec::Power { depth: 4, alpha: 0.5 }.build()?;
    let w = WeightSpec::Random {
        depth: 4,
        seed: 2,
        epsilon: 0.5,
    }
    .build()?;
    let combined = weight_algebra("u^-1*v*w^2", &u, &v, &w)?;
    println!("u^-1*v*w^2 as a leaf spec: {}", weight_to_json(&combined)?);
    Ok(())
}
