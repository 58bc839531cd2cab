//! Weight constructors: products `Π(1 + b_J h_J)`, coefficient extraction,
//! discretised power weights, seeded random doubling weights and pointwise
//! weight expressions such as `u^-1*w^2`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicIndex, DyadicTree, StepWeight};
use crate::error::{Error, Result};
use crate::haar::plain_haar_coefficients;
use crate::sequence::IntervalCoefficients;

/// Rounding allowance when checking `|b_I|/√|I| ≤ 1 - ε`.
const SLACK_ROUNDING: f64 = 1e-12;

/// Coefficients `b_I` with `|b_I|/√|I| ≤ 1 - slack`, so every factor
/// `1 + b_I h_I` stays positive.
#[derive(Clone, Debug, PartialEq)]
pub struct FkpCoefficients {
    values: IntervalCoefficients,
    slack: f64,
    /// Total mass the source weight had before it was normalised (1 when built directly).
    normalization: f64,
}

impl FkpCoefficients {
    pub fn new(values: IntervalCoefficients, slack: f64) -> Result<Self> {
        if !(slack > 0.0 && slack <= 1.0) {
            return Err(Error::Spec(format!("slack must lie in (0, 1], got {slack}")));
        }
        for (index, b) in values.iter() {
            let ratio = b.abs() / index.length().sqrt();
            if ratio > 1.0 - slack + SLACK_ROUNDING {
                return Err(Error::SlackViolation { index, ratio, slack });
            }
        }
        Ok(FkpCoefficients {
            values,
            slack,
            normalization: 1.0,
        })
    }

    pub fn values(&self) -> &IntervalCoefficients {
        &self.values
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn tree(&self) -> DyadicTree {
        self.values.tree()
    }
}

/// `w = Π_J (1 + b_J h_J)` on the leaves; a probability weight.
pub fn fkp_product(b: &FkpCoefficients) -> Result<StepWeight> {
    let tree = b.tree();
    let depth = tree.depth();
    let leaves = (0..tree.leaf_count())
        .map(|leaf| {
            (0..depth)
                .map(|level| {
                    let j = DyadicIndex::new(level, leaf >> (depth - level));
                    let sign = if (leaf >> (depth - level - 1)) & 1 == 1 {
                        1.0
                    } else {
                        -1.0
                    };
                    1.0 + b.values.values()[j.heap_index()] * sign / j.length().sqrt()
                })
                .product()
        })
        .collect();
    StepWeight::new(tree, leaves)
}

/// `b_I = ⟨w, h_I⟩/⟨w⟩_I` of the normalised weight `w/w([0,1))`.
///
/// The recorded slack is `1 - max_I |b_I|/√|I|`, and the normalisation is the
/// original total mass.
pub fn extract_coefficients(w: &StepWeight) -> Result<FkpCoefficients> {
    let tree = w.tree();
    let total = w.mass_at(&DyadicIndex::ROOT);
    let normalised = w.scale(total.recip())?;
    let haar = plain_haar_coefficients(&normalised.to_function());
    let values = IntervalCoefficients::from_fn(tree, |i| haar[i.heap_index()] / normalised.average_at(&i))?;
    let worst = values
        .iter()
        .map(|(i, b)| b.abs() / i.length().sqrt())
        .fold(0.0, f64::max);
    Ok(FkpCoefficients {
        values,
        slack: (1.0 - worst).max(f64::MIN_POSITIVE),
        normalization: total,
    })
}

/// Cell averages of `x^alpha`: `((k+1)^{α+1} - k^{α+1}) 2^{-Nα}/(α+1)`.
pub fn power_weight(alpha: f64, tree: DyadicTree) -> Result<StepWeight> {
    if !(alpha.is_finite() && alpha > -1.0) {
        return Err(Error::BadExponent(alpha));
    }
    let a1 = alpha + 1.0;
    let scale = (-(tree.depth() as f64) * alpha).exp2() / a1;
    StepWeight::from_fn(tree, |k| {
        let k = k as f64;
        ((k + 1.0).powf(a1) - k.powf(a1)) * scale
    })
}

/// Coefficients drawn uniformly from `[-(1-ε)√|I|, (1-ε)√|I|]`.
///
/// Each interval has its own ChaCha stream keyed by `(seed, heap index)`, so
/// the draw for an interval does not depend on traversal order or depth.
pub fn random_fkp_coefficients(seed: u64, epsilon: f64, tree: DyadicTree) -> Result<FkpCoefficients> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Spec(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let values = IntervalCoefficients::from_fn(tree, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i.heap_index() as u64);
        let bound = (1.0 - epsilon) * i.length().sqrt();
        rng.gen_range(-bound..=bound)
    })?;
    FkpCoefficients::new(values, epsilon)
}

/// A random dyadic doubling probability weight: [`fkp_product`] of [`random_fkp_coefficients`].
pub fn random_doubling_weight(seed: u64, epsilon: f64, tree: DyadicTree) -> Result<StepWeight> {
    fkp_product(&random_fkp_coefficients(seed, epsilon, tree)?)
}

/// Declarative weight constructor, the JSON shape accepted on the command line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum WeightSpec {
    Leaves {
        depth: u32,
        leaves: Vec<f64>,
    },
    Fkp {
        depth: u32,
        #[serde(default)]
        b: BTreeMap<String, f64>,
    },
    Power {
        depth: u32,
        alpha: f64,
    },
    Random {
        depth: u32,
        seed: u64,
        epsilon: f64,
    },
    Constant {
        depth: u32,
        value: f64,
    },
}

impl WeightSpec {
    pub fn depth(&self) -> u32 {
        match self {
            WeightSpec::Leaves { depth, .. }
            | WeightSpec::Fkp { depth, .. }
            | WeightSpec::Power { depth, .. }
            | WeightSpec::Random { depth, .. }
            | WeightSpec::Constant { depth, .. } => *depth,
        }
    }

    pub fn build(&self) -> Result<StepWeight> {
        let tree = DyadicTree::new(self.depth())?;
        match self {
            WeightSpec::Leaves { leaves, .. } => StepWeight::new(tree, leaves.clone()),
            WeightSpec::Fkp { b, .. } => {
                let values = IntervalCoefficients::from_keyed(tree, b)?;
                let worst = values
                    .iter()
                    .map(|(i, b)| b.abs() / i.length().sqrt())
                    .fold(0.0, f64::max);
                if worst >= 1.0 {
                    let (index, _) = values
                        .iter()
                        .find(|(i, b)| b.abs() / i.length().sqrt() >= 1.0)
                        .expect("worst ratio attained");
                    return Err(Error::SlackViolation {
                        index,
                        ratio: worst,
                        slack: 0.0,
                    });
                }
                fkp_product(&FkpCoefficients::new(values, 1.0 - worst)?)
            }
            WeightSpec::Power { alpha, .. } => power_weight(*alpha, tree),
            WeightSpec::Random { seed, epsilon, .. } => random_doubling_weight(*seed, *epsilon, tree),
            WeightSpec::Constant { value, .. } => StepWeight::constant(tree, *value),
        }
    }

    /// Leaf-level spec of an existing weight; rebuilding gives a bitwise-equal weight.
    pub fn from_weight(w: &StepWeight) -> Self {
        WeightSpec::Leaves {
            depth: w.depth(),
            leaves: w.leaves().to_vec(),
        }
    }
}

/// A pointwise product of named weights raised to real powers, e.g. `u^-1*w^2`.
///
/// Numeric factors are allowed (`2*w`, `0.5`), and `1` is the unit weight.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightExpr {
    factors: Vec<(Factor, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
enum Factor {
    Name(String),
    Number(f64),
}

impl std::str::FromStr for WeightExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Spec(format!("malformed weight expression `{s}`"));
        let mut factors = Vec::new();
        for term in s.split('*') {
            let term: String = term.chars().filter(|c| !c.is_whitespace()).collect();
            let (base, exponent) = match term.split_once('^') {
                Some((base, exp)) => {
                    let exp = exp.trim_start_matches('(').trim_end_matches(')');
                    (base.to_string(), exp.parse::<f64>().map_err(|_| bad())?)
                }
                None => (term, 1.0),
            };
            if base.is_empty() {
                return Err(bad());
            }
            let factor = if let Ok(number) = base.parse::<f64>() {
                Factor::Number(number)
            } else if base.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                && base.starts_with(|c: char| c.is_ascii_alphabetic())
            {
                Factor::Name(base)
            } else {
                return Err(bad());
            };
            factors.push((factor, exponent));
        }
        Ok(WeightExpr { factors })
    }
}

impl WeightExpr {
    /// Evaluates leafwise against named weights on a common tree.
    pub fn eval(&self, tree: DyadicTree, weights: &BTreeMap<&str, &StepWeight>) -> Result<StepWeight> {
        let mut out = StepWeight::ones(tree);
        for (factor, exponent) in &self.factors {
            out = match factor {
                Factor::Number(c) => out.scale(c.powf(*exponent))?,
                Factor::Name(name) => {
                    let w = weights
                        .get(name.as_str())
                        .ok_or_else(|| Error::Spec(format!("unknown weight `{name}`")))?;
                    out.product(&w.powf(*exponent)?)?
                }
            };
        }
        Ok(out)
    }
}

/// Evaluates an expression over the standard triple `(u, v, w)`.
pub fn weight_algebra(expr: &str, u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<StepWeight> {
    let expr: WeightExpr = expr.parse()?;
    let weights = BTreeMap::from([("u", u), ("v", v), ("w", w)]);
    expr.eval(w.tree(), &weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tree(depth: u32) -> DyadicTree {
        DyadicTree::new(depth).unwrap()
    }

    fn coefficients(t: DyadicTree, values: Vec<f64>) -> FkpCoefficients {
        FkpCoefficients::new(IntervalCoefficients::new(t, values).unwrap(), 0.1).unwrap()
    }

    #[test]
    fn product_examples() {
        let t = tree(3);
        let w = fkp_product(&FkpCoefficients::new(IntervalCoefficients::zeros(t), 1.0).unwrap()).unwrap();
        assert_eq!(w, StepWeight::ones(t));
        let w = fkp_product(&coefficients(tree(1), vec![0.5])).unwrap();
        assert_eq!(w.leaves(), &[0.5, 1.5]);
        let w = fkp_product(&coefficients(tree(2), vec![0.5, 0.3 * 0.5f64.sqrt(), -0.2])).unwrap();
        assert_relative_eq!(w.leaves().iter().sum::<f64>() / 4.0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn slack_violation() {
        let t = tree(1);
        let b = IntervalCoefficients::new(t, vec![0.95]).unwrap();
        assert!(matches!(
            FkpCoefficients::new(b, 0.1),
            Err(Error::SlackViolation { .. })
        ));
    }

    #[test]
    fn extraction_examples() {
        let t = tree(3);
        let b = extract_coefficients(&StepWeight::ones(t)).unwrap();
        assert!(b.values().values().iter().all(|&x| x == 0.0));
        let w = StepWeight::new(tree(1), vec![0.5, 1.5]).unwrap();
        let b = extract_coefficients(&w).unwrap();
        assert_relative_eq!(b.values().values()[0], 0.5, epsilon = 1e-15);
        assert_eq!(b.normalization(), 1.0);
    }

    #[test]
    fn extraction_roundtrip() {
        let t = tree(4);
        let w = StepWeight::from_fn(t, |k| 0.1 + ((k * 11) % 7) as f64).unwrap();
        let b = extract_coefficients(&w).unwrap();
        assert!(b.slack() > 0.0);
        let back = fkp_product(&b).unwrap().scale(b.normalization()).unwrap();
        for (x, y) in back.leaves().iter().zip(w.leaves()) {
            assert_relative_eq!(x, y, max_relative = 1e-10);
        }
    }

    #[test]
    fn power_weight_examples() {
        assert_eq!(power_weight(0.0, tree(3)).unwrap(), StepWeight::ones(tree(3)));
        let w = power_weight(1.0, tree(1)).unwrap();
        assert_relative_eq!(w.leaves()[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(w.leaves()[1], 0.75, epsilon = 1e-15);
        assert!(matches!(power_weight(-1.0, tree(1)), Err(Error::BadExponent(_))));
        let w = power_weight(-0.5, tree(6)).unwrap();
        assert!(w.leaves().windows(2).all(|p| p[0] > p[1]));
    }

    #[test]
    fn random_weight_determinism() {
        let t = tree(6);
        let a = random_doubling_weight(7, 0.5, t).unwrap();
        let b = random_doubling_weight(7, 0.5, t).unwrap();
        assert_eq!(a.leaves(), b.leaves());
        assert_ne!(a, random_doubling_weight(8, 0.5, t).unwrap());
        assert_relative_eq!(a.mass(&DyadicIndex::ROOT).unwrap(), 1.0, epsilon = 1e-12);
        let flat = random_doubling_weight(7, 1.0 - 1e-9, t).unwrap();
        assert!(flat.leaves().iter().all(|x| (x - 1.0).abs() < 1e-6));
        assert!(random_doubling_weight(7, 0.0, t).is_err());
    }

    /// Shallower trees see the same coefficients on their intervals.
    #[test]
    fn random_coefficients_are_order_independent() {
        let shallow = random_fkp_coefficients(3, 0.5, tree(2)).unwrap();
        let deep = random_fkp_coefficients(3, 0.5, tree(5)).unwrap();
        assert_eq!(shallow.values().values(), &deep.values().values()[..3]);
    }

    #[test]
    fn algebra_examples() {
        let t = tree(1);
        let u = StepWeight::new(t, vec![1.0, 2.0]).unwrap();
        let w = StepWeight::new(t, vec![1.0, 3.0]).unwrap();
        let one = StepWeight::ones(t);
        let out = weight_algebra("u^-1*w^2", &u, &one, &w).unwrap();
        assert_relative_eq!(out.leaves()[0], 1.0);
        assert_relative_eq!(out.leaves()[1], 4.5);
        let unit = weight_algebra("w * w^-1", &u, &one, &w).unwrap();
        assert!(unit.leaves().iter().all(|x| (x - 1.0).abs() < 1e-15));
        assert_eq!(weight_algebra("v*w^2", &u, &one, &w).unwrap(), w.powf(2.0).unwrap());
        assert!(weight_algebra("2*w^(0.5)^", &u, &one, &w).is_err());
        assert_relative_eq!(
            weight_algebra("2*w^(0.5)", &u, &one, &w).unwrap().leaves()[1],
            2.0 * 3f64.sqrt()
        );
        assert!(weight_algebra("x", &u, &one, &w).is_err());
    }

    #[test]
    fn spec_json() {
        let spec: WeightSpec = serde_json::from_str(r#"{"type":"fkp","depth":1,"b":{"0,0":0.5}}"#).unwrap();
        assert_eq!(spec.build().unwrap().leaves(), &[0.5, 1.5]);
        let spec: WeightSpec = serde_json::from_str(r#"{"type":"power","depth":1,"alpha":1}"#).unwrap();
        assert_relative_eq!(spec.build().unwrap().leaves()[1], 0.75);
        let spec: WeightSpec = serde_json::from_str(r#"{"type":"fkp","depth":1,"b":{"0,0":1.0}}"#).unwrap();
        assert!(matches!(spec.build(), Err(Error::SlackViolation { .. })));
        let w = WeightSpec::Random {
            depth: 4,
            seed: 1,
            epsilon: 0.5,
        }
        .build()
        .unwrap();
        let text = serde_json::to_string(&WeightSpec::from_weight(&w)).unwrap();
        let back: WeightSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.build().unwrap(), w);
    }
}
