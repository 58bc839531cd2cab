//! Dyadic operators applied to step functions: the weighted square function,
//! signed `t`-Haar multipliers, the dyadic paraproduct, its resolvent and the
//! positive operator `P_{w,λ}`.
//!
//! Every operator works leaf-by-leaf along the root-to-leaf path, so a single
//! application costs `O(N·2^N)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::characteristics::plain_deltas;
use crate::dyadic::{check_same_tree, weighted_averages, DyadicIndex, DyadicTree, StepFunction, StepWeight};
use crate::error::{Error, Result};
use crate::haar::plain_haar_coefficients;
use crate::sequence::{CarlesonSequence, IntervalCoefficients};

/// Threshold on `|b_I|/√|I|` beyond which the resolvent refuses to run.
pub const NEAR_SINGULAR: f64 = 1.0 - 1e-6;

/// Tolerance of the resolvent postcondition `(Id - π_b) P_b f = f - ⟨f⟩`.
pub const RESOLVENT_TOLERANCE: f64 = 1e-8;

/// Heap indices of the non-leaf ancestors of `leaf`, root first.
fn ancestors(depth: u32, leaf: usize) -> impl Iterator<Item = DyadicIndex> {
    (0..depth).map(move |level| DyadicIndex::new(level, leaf >> (depth - level)))
}

/// Sign of the plain Haar function of the level-`level` ancestor on `leaf`.
fn haar_sign(depth: u32, level: u32, leaf: usize) -> f64 {
    if (leaf >> (depth - level - 1)) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `S_w f(x) = (Σ_{I ∋ x, level ≥ 1} |⟨f⟩_I^w - ⟨f⟩_Ĩ^w|²)^{1/2}`.
///
/// The root has no parent on the truncated tree and contributes nothing.
pub fn square_function(w: &StepWeight, f: &StepFunction) -> Result<StepFunction> {
    let depth = w.depth();
    let averages = weighted_averages(f, w)?;
    let leaves = (0..w.tree().leaf_count())
        .map(|leaf| {
            let mut total = 0.0;
            let mut parent = averages[0];
            for level in 1..=depth {
                let here = averages[DyadicIndex::new(level, leaf >> (depth - level)).heap_index()];
                total += (here - parent).powi(2);
                parent = here;
            }
            total.sqrt()
        })
        .collect();
    StepFunction::new(w.tree(), leaves)
}

/// `K_I^{w,v} = (w(I⁻)⟨vw⁻¹⟩_{I⁺}^w + w(I⁺)⟨vw⁻¹⟩_{I⁻}^w)/w(I)` for each non-leaf `I`.
///
/// With these, `‖S_w f‖²_{L²(v)} = Σ_I K_I |⟨f, h_I^w⟩_w|²`.
pub fn k_coefficients(w: &StepWeight, v: &StepWeight) -> Result<Vec<f64>> {
    check_same_tree(w.tree(), v.tree())?;
    Ok(w.tree()
        .non_leaf()
        .map(|i| {
            let (l, r) = (i.left(), i.right());
            let (wl, wr) = (w.mass(&l).unwrap(), w.mass(&r).unwrap());
            let (vl, vr) = (v.mass(&l).unwrap(), v.mass(&r).unwrap());
            (wl * vr / wr + wr * vl / wl) / w.mass(&i).unwrap()
        })
        .collect())
}

/// Signs `σ_I ∈ {+1, -1}` on the non-leaf intervals, heap-indexed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignPattern {
    tree: DyadicTree,
    signs: Vec<i8>,
}

/// JSON shape of a [`SignPattern`]: a default sign plus per-interval overrides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPatternSpec {
    pub default: i8,
    #[serde(default)]
    pub overrides: BTreeMap<String, i8>,
}

fn check_sign(sign: i8) -> Result<i8> {
    match sign {
        1 | -1 => Ok(sign),
        other => Err(Error::Spec(format!("sign must be +1 or -1, got {other}"))),
    }
}

impl SignPattern {
    pub fn constant(tree: DyadicTree, sign: i8) -> Result<Self> {
        Ok(SignPattern {
            tree,
            signs: vec![check_sign(sign)?; tree.non_leaf_count()],
        })
    }

    pub fn all_plus(tree: DyadicTree) -> Self {
        SignPattern {
            tree,
            signs: vec![1; tree.non_leaf_count()],
        }
    }

    pub fn new(tree: DyadicTree, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != tree.non_leaf_count() {
            return Err(Error::LeafCount {
                expected: tree.non_leaf_count(),
                found: signs.len(),
            });
        }
        for &s in &signs {
            check_sign(s)?;
        }
        Ok(SignPattern { tree, signs })
    }

    /// Pattern whose `k`-th sign (heap order) is `-1` iff bit `k` of `bits` is set.
    pub fn from_bits(tree: DyadicTree, bits: u64) -> Self {
        let signs = (0..tree.non_leaf_count())
            .map(|k| if k < 64 && (bits >> k) & 1 == 1 { -1 } else { 1 })
            .collect();
        SignPattern { tree, signs }
    }

    pub fn from_spec(tree: DyadicTree, spec: &SignPatternSpec) -> Result<Self> {
        let mut pattern = SignPattern::constant(tree, spec.default)?;
        for (key, &sign) in &spec.overrides {
            let index: DyadicIndex = key.parse()?;
            tree.check_non_leaf(&index)?;
            pattern.signs[index.heap_index()] = check_sign(sign)?;
        }
        Ok(pattern)
    }

    /// Majority sign as default, the rest as overrides.
    pub fn to_spec(&self) -> SignPatternSpec {
        let minus = self.signs.iter().filter(|&&s| s < 0).count();
        let default = if 2 * minus > self.signs.len() { -1 } else { 1 };
        let overrides = self
            .tree
            .non_leaf()
            .zip(&self.signs)
            .filter(|(_, &s)| s != default)
            .map(|(i, &s)| (i.key(), s))
            .collect();
        SignPatternSpec { default, overrides }
    }

    pub fn tree(&self) -> DyadicTree {
        self.tree
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn get(&self, index: &DyadicIndex) -> Result<i8> {
        self.tree.check_non_leaf(index)?;
        Ok(self.signs[index.heap_index()])
    }

    pub fn flip(&mut self, index: &DyadicIndex) -> Result<()> {
        self.tree.check_non_leaf(index)?;
        self.signs[index.heap_index()] *= -1;
        Ok(())
    }

    pub fn negated(&self) -> SignPattern {
        SignPattern {
            tree: self.tree,
            signs: self.signs.iter().map(|s| -s).collect(),
        }
    }
}

/// The signed `t`-Haar multiplier
/// `T^t_{w,σ} f = Σ_I σ_I (w/⟨w⟩_I)^t ⟨f, h_I⟩ h_I` with plain Haar functions.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarMultiplier {
    pub weight: StepWeight,
    pub exponent: f64,
    pub signs: SignPattern,
}

impl HaarMultiplier {
    pub fn new(weight: StepWeight, exponent: f64, signs: SignPattern) -> Result<Self> {
        check_same_tree(weight.tree(), signs.tree())?;
        if !exponent.is_finite() {
            return Err(Error::BadExponent(exponent));
        }
        Ok(HaarMultiplier {
            weight,
            exponent,
            signs,
        })
    }

    /// `T_w`: exponent one, all signs positive.
    pub fn t_w(weight: StepWeight) -> Self {
        let signs = SignPattern::all_plus(weight.tree());
        HaarMultiplier {
            weight,
            exponent: 1.0,
            signs,
        }
    }

    /// The martingale transform `f ↦ Σ σ_I ⟨f,h_I⟩h_I`.
    pub fn martingale(signs: SignPattern) -> Self {
        HaarMultiplier {
            weight: StepWeight::ones(signs.tree()),
            exponent: 0.0,
            signs,
        }
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        check_same_tree(self.weight.tree(), f.tree())?;
        let tree = f.tree();
        let depth = tree.depth();
        let coefficients = plain_haar_coefficients(f);
        let averages = self.weight.averages();
        let t = self.exponent;
        let leaves = (0..tree.leaf_count())
            .map(|leaf| {
                let wx = self.weight.leaves()[leaf];
                ancestors(depth, leaf)
                    .map(|i| {
                        let h = i.heap_index();
                        let factor = if t == 0.0 { 1.0 } else { (wx / averages[h]).powf(t) };
                        let haar = haar_sign(depth, i.level, leaf) / i.length().sqrt();
                        f64::from(self.signs.signs[h]) * factor * coefficients[h] * haar
                    })
                    .sum()
            })
            .collect();
        StepFunction::new(tree, leaves)
    }
}

/// `π_b f = Σ_J ⟨f⟩_J b_J h_J`.
pub fn paraproduct(b: &IntervalCoefficients, f: &StepFunction) -> Result<StepFunction> {
    check_same_tree(b.tree(), f.tree())?;
    let tree = f.tree();
    let depth = tree.depth();
    let averages = tree.integrals(f.leaves());
    let leaves = (0..tree.leaf_count())
        .map(|leaf| {
            ancestors(depth, leaf)
                .map(|j| {
                    let h = j.heap_index();
                    let len = j.length();
                    (averages[h] / len) * b.values()[h] * haar_sign(depth, j.level, leaf) / len.sqrt()
                })
                .sum()
        })
        .collect();
    StepFunction::new(tree, leaves)
}

/// `|b_I|/√|I|` for every non-leaf interval; positivity of `1 + b_I h_I` needs all `< 1`.
pub fn coefficient_ratios(b: &IntervalCoefficients) -> Vec<f64> {
    b.iter().map(|(i, v)| v.abs() / i.length().sqrt()).collect()
}

/// The resolvent `P_b = Σ_n π_b^n` applied to the mean-zero part of `f`, by the
/// product formula `P_b f(x) = Σ_I Π_{J ⊊ I, J ∋ x}(1 + b_J h_J(x)) ⟨f,h_I⟩ h_I(x)`.
///
/// The result is checked against `(Id - π_b) P_b f = f - ⟨f⟩_{[0,1)}`.
pub fn product_resolvent(b: &IntervalCoefficients, f: &StepFunction) -> Result<StepFunction> {
    check_same_tree(b.tree(), f.tree())?;
    for (h, ratio) in coefficient_ratios(b).into_iter().enumerate() {
        if ratio >= NEAR_SINGULAR {
            return Err(Error::NearSingular {
                index: DyadicIndex::from_heap_index(h),
                ratio,
            });
        }
    }
    let tree = f.tree();
    let depth = tree.depth() as usize;
    let coefficients = plain_haar_coefficients(f);
    let mut path = Vec::with_capacity(depth);
    let leaves = (0..tree.leaf_count())
        .map(|leaf| {
            path.clear();
            path.extend(ancestors(depth as u32, leaf).map(|i| {
                let h = i.heap_index();
                let haar = haar_sign(depth as u32, i.level, leaf) / i.length().sqrt();
                (coefficients[h] * haar, 1.0 + b.values()[h] * haar)
            }));
            // Walk bottom-up so the running product covers the strict descendants.
            let mut product = 1.0;
            let mut total = 0.0;
            for &(term, factor) in path.iter().rev() {
                total += product * term;
                product *= factor;
            }
            total
        })
        .collect();
    let out = StepFunction::new(tree, leaves)?;

    let mean = f.average(&DyadicIndex::ROOT)?;
    let residual = (&out - &paraproduct(b, &out)?).max_abs_diff(&f.map(|x| x - mean));
    let scale = f.leaves().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if residual > RESOLVENT_TOLERANCE * scale {
        return Err(Error::ResolventMismatch(residual / scale));
    }
    Ok(out)
}

/// `P_{w,λ} f(x) = Σ_{I ∋ x} w(x) λ_I ⟨f⟩_I / |I|`.
pub fn positive_operator(w: &StepWeight, lambda: &CarlesonSequence, f: &StepFunction) -> Result<StepFunction> {
    check_same_tree(w.tree(), f.tree())?;
    check_same_tree(lambda.tree(), f.tree())?;
    let tree = f.tree();
    let depth = tree.depth();
    let integrals = tree.integrals(f.leaves());
    let leaves = (0..tree.leaf_count())
        .map(|leaf| {
            let sum: f64 = ancestors(depth, leaf)
                .map(|i| {
                    let h = i.heap_index();
                    let len = i.length();
                    lambda.values()[h] * integrals[h] / (len * len)
                })
                .sum();
            w.leaves()[leaf] * sum
        })
        .collect();
    StepFunction::new(tree, leaves)
}

/// `λ_I = |Δ_I u⁻¹|/⟨u⁻¹⟩_I · |Δ_I(vw²)|/⟨vw²⟩_I · |I|/⟨w⟩_I`.
pub fn lambda_from_weights(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<CarlesonSequence> {
    check_same_tree(u.tree(), w.tree())?;
    let u_inv = u.recip();
    let vw2 = v.product(&w.powf(2.0)?)?;
    let du = plain_deltas(&u_inv);
    let dv = plain_deltas(&vw2);
    CarlesonSequence::from_fn(w.tree(), |i| {
        let h = i.heap_index();
        let a = du[h].abs() / u_inv.average(&i).unwrap();
        let b = dv[h].abs() / vw2.average(&i).unwrap();
        a * b * i.length() / w.average(&i).unwrap()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tree(depth: u32) -> DyadicTree {
        DyadicTree::new(depth).unwrap()
    }

    fn func(depth: u32, leaves: &[f64]) -> StepFunction {
        StepFunction::new(tree(depth), leaves.to_vec()).unwrap()
    }

    fn weight(depth: u32, leaves: &[f64]) -> StepWeight {
        StepWeight::new(tree(depth), leaves.to_vec()).unwrap()
    }

    fn sample(depth: u32, salt: usize) -> StepFunction {
        StepFunction::from_fn(tree(depth), |k| (((k + salt) * 37 % 17) as f64 - 8.0) / 3.0).unwrap()
    }

    #[test]
    fn square_function_examples() {
        let one = StepWeight::ones(tree(1));
        assert_eq!(
            square_function(&one, &StepFunction::constant(tree(1), 3.0))
                .unwrap()
                .leaves(),
            &[0.0, 0.0]
        );
        assert_eq!(
            square_function(&one, &func(1, &[0.0, 4.0])).unwrap().leaves(),
            &[2.0, 2.0]
        );
    }

    /// With `w ≡ 1` the weighted square function is the plain one.
    #[test]
    fn square_function_unweighted_reduction() {
        let t = tree(4);
        let f = sample(4, 3);
        let s = square_function(&StepWeight::ones(t), &f).unwrap();
        for leaf in 0..t.leaf_count() {
            let mut total = 0.0;
            for level in 1..=4 {
                let i = DyadicIndex::new(level, leaf >> (4 - level));
                let d = f.average(&i).unwrap() - f.average(&i.parent().unwrap()).unwrap();
                total += d * d;
            }
            assert_relative_eq!(s.leaves()[leaf], total.sqrt(), max_relative = 1e-13);
        }
    }

    #[test]
    fn quadratic_form_identity() {
        let t = tree(5);
        let w = StepWeight::from_fn(t, |k| 0.5 + ((k * 13) % 7) as f64).unwrap();
        let v = StepWeight::from_fn(t, |k| 1.0 + ((k * 5) % 11) as f64 / 4.0).unwrap();
        let f = sample(5, 1);
        let s = square_function(&w, &f).unwrap();
        let lhs = s.norm_sq(&v);
        let k = k_coefficients(&w, &v).unwrap();
        let c = crate::haar::haar_coefficients(&f, &w).unwrap();
        let rhs: f64 = k.iter().zip(&c).map(|(k, c)| k * c * c).sum();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn haar_multiplier_examples() {
        let t = tree(1);
        let w = weight(1, &[1.0, 3.0]);
        let f = func(1, &[0.0, 4.0]);
        let out = HaarMultiplier::t_w(w.clone()).apply(&f).unwrap();
        assert_relative_eq!(out.leaves()[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(out.leaves()[1], 3.0, epsilon = 1e-14);

        let mut signs = SignPattern::all_plus(t);
        signs.flip(&DyadicIndex::ROOT).unwrap();
        let out = HaarMultiplier::new(w, 1.0, signs).unwrap().apply(&f).unwrap();
        assert_relative_eq!(out.leaves()[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(out.leaves()[1], -3.0, epsilon = 1e-14);
    }

    #[test]
    fn martingale_transform_is_projection() {
        let t = tree(4);
        let f = sample(4, 2);
        let out = HaarMultiplier::martingale(SignPattern::all_plus(t)).apply(&f).unwrap();
        let mean = f.average(&DyadicIndex::ROOT).unwrap();
        assert!(out.max_abs_diff(&f.map(|x| x - mean)) < 1e-12);
    }

    #[test]
    fn sign_pattern_spec_roundtrip() {
        let t = tree(3);
        let p = SignPattern::from_bits(t, 0b1010011);
        assert_eq!(SignPattern::from_spec(t, &p.to_spec()).unwrap(), p);
        let spec: SignPatternSpec = serde_json::from_str(r#"{"default":1,"overrides":{"1,1":-1}}"#).unwrap();
        let p = SignPattern::from_spec(t, &spec).unwrap();
        assert_eq!(p.get(&DyadicIndex::new(1, 1)).unwrap(), -1);
        assert_eq!(p.signs().iter().filter(|&&s| s == -1).count(), 1);
        let bad = SignPatternSpec {
            default: 2,
            overrides: BTreeMap::new(),
        };
        assert!(SignPattern::from_spec(t, &bad).is_err());
    }

    #[test]
    fn paraproduct_examples() {
        let t = tree(1);
        let f = func(1, &[0.0, 4.0]);
        let zero = IntervalCoefficients::zeros(t);
        assert_eq!(paraproduct(&zero, &f).unwrap().leaves(), &[0.0, 0.0]);
        let b = IntervalCoefficients::new(t, vec![0.5]).unwrap();
        assert_eq!(paraproduct(&b, &f).unwrap().leaves(), &[-1.0, 1.0]);
    }

    #[test]
    fn resolvent_examples() {
        let t = tree(3);
        let f = sample(3, 4);
        let mean = f.average(&DyadicIndex::ROOT).unwrap();
        let out = product_resolvent(&IntervalCoefficients::zeros(t), &f).unwrap();
        assert!(out.max_abs_diff(&f.map(|x| x - mean)) < 1e-12);

        let b = IntervalCoefficients::new(tree(1), vec![1.0]).unwrap();
        assert!(matches!(
            product_resolvent(&b, &func(1, &[0.0, 1.0])),
            Err(Error::NearSingular { .. })
        ));
    }

    /// Neumann series `Σ π_b^n` on the mean-zero part terminates at finite depth.
    #[test]
    fn resolvent_matches_neumann_series() {
        let t = tree(4);
        let b = IntervalCoefficients::from_fn(t, |i| {
            0.6 * i.length().sqrt() * (((i.heap_index() * 7) % 5) as f64 / 2.0 - 1.0)
        })
        .unwrap();
        let f = sample(4, 9);
        let mean = f.average(&DyadicIndex::ROOT).unwrap();
        let mut term = f.map(|x| x - mean);
        let mut total = term.clone();
        for _ in 0..50 {
            term = paraproduct(&b, &term).unwrap();
            total = &total + &term;
            if term.leaves().iter().all(|x| x.abs() < 1e-15) {
                break;
            }
        }
        let out = product_resolvent(&b, &f).unwrap();
        assert!(out.max_abs_diff(&total) < 1e-10);
    }

    #[test]
    fn positive_operator_examples() {
        let t = tree(1);
        let one = StepWeight::ones(t);
        let f = func(1, &[0.0, 4.0]);
        let zero = CarlesonSequence::zeros(t);
        assert_eq!(positive_operator(&one, &zero, &f).unwrap().leaves(), &[0.0, 0.0]);
        let lambda = CarlesonSequence::new(t, vec![1.0]).unwrap();
        assert_eq!(positive_operator(&one, &lambda, &f).unwrap().leaves(), &[2.0, 2.0]);
    }

    #[test]
    fn lambda_examples() {
        let one = StepWeight::ones(tree(1));
        let w = weight(1, &[1.0, 3.0]);
        assert_eq!(lambda_from_weights(&one, &one, &w).unwrap().values(), &[0.0]);
        let u = weight(1, &[1.0, 2.0]);
        assert_relative_eq!(
            lambda_from_weights(&u, &one, &w).unwrap().values()[0],
            8.0 / 15.0,
            epsilon = 1e-14
        );
    }
}
