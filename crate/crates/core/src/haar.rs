//! Plain and weighted Haar functions.
//!
//! `h_I^ω` takes the value `√(ω(I⁻)/(ω(I⁺)ω(I)))` on the right half `I⁺` and
//! `-√(ω(I⁺)/(ω(I⁻)ω(I)))` on the left half `I⁻`, so it has `ω`-mean zero and
//! unit norm in `L²(ω)`. With `ω ≡ 1` this is `|I|^{-1/2}(𝟙_{I⁺} - 𝟙_{I⁻})`.

use serde::{Deserialize, Serialize};

use crate::dyadic::{check_same_tree, weighted_averages, DyadicIndex, DyadicTree, StepFunction, StepWeight};
use crate::error::{Error, Result};

/// A two-valued Haar profile supported on `interval`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarVector {
    pub interval: DyadicIndex,
    /// Value on the right child `I⁺`.
    pub plus_value: f64,
    /// Value on the left child `I⁻`.
    pub minus_value: f64,
}

impl HaarVector {
    /// Value on a subinterval `J ⊊ I` (any leaf representative of `J` gives the same value).
    pub fn value_on(&self, sub: &DyadicIndex) -> f64 {
        if !self.interval.contains(sub) || sub.level == self.interval.level {
            return 0.0;
        }
        let bit = (sub.position >> (sub.level - self.interval.level - 1)) & 1;
        if bit == 1 {
            self.plus_value
        } else {
            self.minus_value
        }
    }

    pub fn to_function(&self, tree: DyadicTree) -> StepFunction {
        let mut f = StepFunction::zeros(tree);
        let range = self.interval.leaf_range(tree.depth());
        let mid = range.start + range.len() / 2;
        let leaves = f.leaves_mut();
        leaves[range.start..mid].fill(self.minus_value);
        leaves[mid..range.end].fill(self.plus_value);
        f
    }
}

/// Coefficients of `h_I^ω = alpha·h_I^ν + beta·𝟙_I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCoefficients {
    pub alpha: f64,
    pub beta: f64,
}

fn profile(interval: DyadicIndex, left: f64, right: f64) -> HaarVector {
    let total = left + right;
    HaarVector {
        interval,
        plus_value: (left / (right * total)).sqrt(),
        minus_value: -(right / (left * total)).sqrt(),
    }
}

/// The unweighted Haar function `h_I`.
pub fn plain_haar(tree: DyadicTree, index: &DyadicIndex) -> Result<HaarVector> {
    tree.check_non_leaf(index)?;
    let scale = index.length().sqrt().recip();
    Ok(HaarVector {
        interval: *index,
        plus_value: scale,
        minus_value: -scale,
    })
}

/// The weighted Haar function `h_I^ω`.
pub fn haar_vector(omega: &StepWeight, index: &DyadicIndex) -> Result<HaarVector> {
    omega.tree().check_non_leaf(index)?;
    Ok(profile(
        *index,
        omega.mass_at(&index.left()),
        omega.mass_at(&index.right()),
    ))
}

/// Weighted Haar functions for every non-leaf interval, heap-indexed.
pub fn haar_vectors(omega: &StepWeight) -> Vec<HaarVector> {
    omega
        .tree()
        .non_leaf()
        .map(|i| profile(i, omega.mass_at(&i.left()), omega.mass_at(&i.right())))
        .collect()
}

/// `⟨f, h_I^ω⟩_ω = ∫ f h_I^ω ω`.
pub fn haar_coefficient(f: &StepFunction, omega: &StepWeight, index: &DyadicIndex) -> Result<f64> {
    check_same_tree(f.tree(), omega.tree())?;
    let h = haar_vector(omega, index)?;
    let depth = omega.depth();
    let integral = |sub: DyadicIndex| -> f64 {
        let range = sub.leaf_range(depth);
        f.leaves()[range.clone()]
            .iter()
            .zip(&omega.leaves()[range])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * omega.tree().cell_length()
    };
    Ok(h.plus_value * integral(index.right()) + h.minus_value * integral(index.left()))
}

/// All weighted Haar coefficients `⟨f, h_I^ω⟩_ω`, heap-indexed over non-leaf intervals.
pub fn haar_coefficients(f: &StepFunction, omega: &StepWeight) -> Result<Vec<f64>> {
    let tree = omega.tree();
    let fw = f.times_weight(omega)?;
    let integrals = tree.integrals(fw.leaves());
    Ok(tree
        .non_leaf()
        .map(|i| {
            let h = profile(i, omega.mass_at(&i.left()), omega.mass_at(&i.right()));
            h.plus_value * integrals[i.right().heap_index()] + h.minus_value * integrals[i.left().heap_index()]
        })
        .collect())
}

/// Unweighted Haar coefficients `⟨f, h_I⟩`, heap-indexed over non-leaf intervals.
pub fn plain_haar_coefficients(f: &StepFunction) -> Vec<f64> {
    let tree = f.tree();
    let integrals = tree.integrals(f.leaves());
    tree.non_leaf()
        .map(|i| (integrals[i.right().heap_index()] - integrals[i.left().heap_index()]) / i.length().sqrt())
        .collect()
}

/// `Δ_I^ω(f) = ⟨f⟩_{I⁺}^ω - ⟨f⟩_{I⁻}^ω`.
pub fn weighted_delta(f: &StepFunction, omega: &StepWeight, index: &DyadicIndex) -> Result<f64> {
    omega.tree().check_non_leaf(index)?;
    let avg = weighted_averages(f, omega)?;
    Ok(avg[index.right().heap_index()] - avg[index.left().heap_index()])
}

/// `⟨f⟩_I^ω - ⟨f⟩_{Ĩ}^ω`.
pub fn parent_difference(f: &StepFunction, omega: &StepWeight, index: &DyadicIndex) -> Result<f64> {
    omega.tree().check(index)?;
    let parent = index.parent().ok_or(Error::RootInterval(*index))?;
    let avg = weighted_averages(f, omega)?;
    Ok(avg[index.heap_index()] - avg[parent.heap_index()])
}

/// Writes `h_I^ω` as `alpha·h_I^ν + beta·𝟙_I`.
pub fn decompose(omega: &StepWeight, nu: &StepWeight, index: &DyadicIndex) -> Result<DecompositionCoefficients> {
    check_same_tree(omega.tree(), nu.tree())?;
    omega.tree().check_non_leaf(index)?;
    // ⟨νω⁻¹⟩_J^ω = ν(J)/ω(J)
    let ratio = |j: DyadicIndex| nu.mass_at(&j) / omega.mass_at(&j);
    let (left, right) = (index.left(), index.right());
    let (r_plus, r_minus, r_whole) = (ratio(right), ratio(left), ratio(*index));
    let alpha = (r_plus * r_minus / r_whole).sqrt();
    let (m_plus, m_minus, m_whole) = (omega.mass_at(&right), omega.mass_at(&left), omega.mass_at(index));
    let beta = (m_plus * m_minus / m_whole).sqrt() / m_whole * (r_plus - r_minus) / r_whole;
    Ok(DecompositionCoefficients { alpha, beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tree(depth: u32) -> DyadicTree {
        DyadicTree::new(depth).unwrap()
    }

    #[test]
    fn unit_weight_gives_standard_haar() {
        let w = StepWeight::ones(tree(3));
        let h = haar_vector(&w, &DyadicIndex::ROOT).unwrap();
        assert_relative_eq!(h.plus_value, 1.0, epsilon = 1e-15);
        assert_relative_eq!(h.minus_value, -1.0, epsilon = 1e-15);
        let h = haar_vector(&w, &DyadicIndex::new(2, 1)).unwrap();
        assert_relative_eq!(h.plus_value, 2.0, epsilon = 1e-15);
        assert_eq!(h, plain_haar(w.tree(), &DyadicIndex::new(2, 1)).unwrap());
    }

    #[test]
    fn depth_one_weighted_profile() {
        // masses 1/2 and 3/2, total 2
        let w = StepWeight::new(tree(1), vec![1.0, 3.0]).unwrap();
        let h = haar_vector(&w, &DyadicIndex::ROOT).unwrap();
        assert_relative_eq!(h.plus_value, (1.0f64 / 6.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(h.minus_value, -(1.5f64).sqrt(), epsilon = 1e-15);
        let hf = h.to_function(w.tree());
        assert!(hf.inner(&StepFunction::constant(w.tree(), 1.0), &w).abs() < 1e-15);
        assert_relative_eq!(hf.norm_sq(&w), 1.0, epsilon = 1e-14);

        let mirrored = haar_vector(&w.mirror(), &DyadicIndex::ROOT).unwrap();
        assert_relative_eq!(mirrored.plus_value, (1.5f64).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(mirrored.minus_value, -(1.0f64 / 6.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn leaf_intervals_rejected() {
        let w = StepWeight::ones(tree(2));
        let leaf = DyadicIndex::new(2, 0);
        assert!(matches!(haar_vector(&w, &leaf), Err(Error::LeafInterval(_))));
        let f = StepFunction::zeros(w.tree());
        assert!(matches!(haar_coefficient(&f, &w, &leaf), Err(Error::LeafInterval(_))));
        assert!(matches!(weighted_delta(&f, &w, &leaf), Err(Error::LeafInterval(_))));
        assert!(matches!(decompose(&w, &w, &leaf), Err(Error::LeafInterval(_))));
        assert!(matches!(
            parent_difference(&f, &w, &DyadicIndex::ROOT),
            Err(Error::RootInterval(_))
        ));
    }

    #[test]
    fn coefficient_examples() {
        let t = tree(1);
        let one = StepWeight::ones(t);
        let f = StepFunction::new(t, vec![0.0, 4.0]).unwrap();
        assert_relative_eq!(
            haar_coefficient(&f, &one, &DyadicIndex::ROOT).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(weighted_delta(&f, &one, &DyadicIndex::ROOT).unwrap(), 4.0);
        assert_relative_eq!(parent_difference(&f, &one, &DyadicIndex::new(1, 0)).unwrap(), -2.0);

        let w = StepWeight::new(t, vec![1.0, 3.0]).unwrap();
        assert_relative_eq!(weighted_delta(&f, &w, &DyadicIndex::ROOT).unwrap(), 4.0);
        let h = haar_vector(&w, &DyadicIndex::ROOT).unwrap().to_function(t);
        assert_relative_eq!(
            haar_coefficient(&h, &w, &DyadicIndex::ROOT).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let c = StepFunction::constant(t, 5.0);
        assert!(haar_coefficient(&c, &w, &DyadicIndex::ROOT).unwrap().abs() < 1e-14);
        assert_eq!(weighted_delta(&c, &w, &DyadicIndex::ROOT).unwrap(), 0.0);
        assert_eq!(
            parent_difference(&StepFunction::constant(t, 1.0), &w, &DyadicIndex::new(1, 1)).unwrap(),
            0.0
        );
    }

    #[test]
    fn batch_coefficients_match_single() {
        let t = tree(3);
        let w = StepWeight::from_fn(t, |k| 1.0 + (k * k % 5) as f64).unwrap();
        let f = StepFunction::from_fn(t, |k| (k as f64).sin()).unwrap();
        let all = haar_coefficients(&f, &w).unwrap();
        for i in t.non_leaf() {
            assert_relative_eq!(
                all[i.heap_index()],
                haar_coefficient(&f, &w, &i).unwrap(),
                epsilon = 1e-13
            );
        }
        let plain = plain_haar_coefficients(&f);
        let one = StepWeight::ones(t);
        for i in t.non_leaf() {
            assert_relative_eq!(
                plain[i.heap_index()],
                haar_coefficient(&f, &one, &i).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn decomposition_identity_weight() {
        let w = StepWeight::new(tree(2), vec![1.0, 2.0, 5.0, 0.5]).unwrap();
        let d = decompose(&w, &w, &DyadicIndex::ROOT).unwrap();
        assert_relative_eq!(d.alpha, 1.0, epsilon = 1e-15);
        assert_eq!(d.beta, 0.0);
    }

    /// Solves `h^ω = alpha·h^ν + beta·𝟙` from the two leaf equations.
    fn solve_two_by_two(hw: &HaarVector, hn: &HaarVector) -> (f64, f64) {
        // plus:  alpha*hn.plus  + beta = hw.plus
        // minus: alpha*hn.minus + beta = hw.minus
        let alpha = (hw.plus_value - hw.minus_value) / (hn.plus_value - hn.minus_value);
        (alpha, hw.plus_value - alpha * hn.plus_value)
    }

    #[test]
    fn decomposition_matches_linear_solve() {
        let t = tree(1);
        let cases = [
            (StepWeight::ones(t), StepWeight::new(t, vec![1.0, 3.0]).unwrap()),
            (StepWeight::new(t, vec![1.0, 3.0]).unwrap(), StepWeight::ones(t)),
        ];
        for (omega, nu) in cases {
            let d = decompose(&omega, &nu, &DyadicIndex::ROOT).unwrap();
            let (alpha, beta) = solve_two_by_two(
                &haar_vector(&omega, &DyadicIndex::ROOT).unwrap(),
                &haar_vector(&nu, &DyadicIndex::ROOT).unwrap(),
            );
            assert!(d.alpha > 0.0);
            assert_relative_eq!(d.alpha, alpha, epsilon = 1e-14);
            assert_relative_eq!(d.beta, beta, epsilon = 1e-14);
        }
        // ω = (1,3), ν ≡ 1: Δ^ω(ω⁻¹) = 1/3 - 1
        let omega = StepWeight::new(t, vec![1.0, 3.0]).unwrap();
        let delta = weighted_delta(&omega.recip().to_function(), &omega, &DyadicIndex::ROOT).unwrap();
        assert_relative_eq!(delta, -2.0 / 3.0, epsilon = 1e-15);
    }
}
