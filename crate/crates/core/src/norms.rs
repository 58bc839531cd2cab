//! Operator norms between weighted `L²` spaces on the finite tree.
//!
//! Everything reduces to the largest eigenvalue of a symmetric positive
//! semi-definite matrix, found by power iteration with a Rayleigh-quotient
//! stopping rule. The start vector is pseudo-random but fixed, so results are
//! bitwise reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{check_same_tree, DyadicIndex, DyadicTree, StepFunction, StepWeight};
use crate::error::{Error, Result};
use crate::haar::{haar_coefficients, haar_vectors, plain_haar};
use crate::operators::{k_coefficients, positive_operator, HaarMultiplier, SignPattern};
use crate::sequence::CarlesonSequence;

/// Stop once the Rayleigh quotient changes by less than this, relatively.
pub const RAYLEIGH_TOLERANCE: f64 = 1e-12;
/// Iteration budget before [`Error::EigenFailure`].
pub const MAX_ITERATIONS: usize = 100_000;
/// Largest number of free signs searched exhaustively by [`uniform_sigma_norm`].
pub const EXHAUSTIVE_SIGNS: usize = 15;
/// Relative defect tolerated by the linearity probe.
pub const LINEARITY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMethod {
    /// Single eigenproblem.
    Eigen,
    /// Maximum over every sign pattern.
    Exhaustive,
    /// Maximum over sampled sign patterns; a lower bound.
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub value: f64,
    pub method: NormMethod,
    /// Power iterations spent (summed over patterns for sign searches).
    pub iterations: usize,
    pub depth: u32,
}

/// How many random sign patterns to try when exhaustive search is too large.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingBudget {
    pub samples: usize,
    pub seed: u64,
}

impl Default for SamplingBudget {
    fn default() -> Self {
        SamplingBudget { samples: 256, seed: 0 }
    }
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0fd1_ad1c);
    (0..n)
        .map(|_| rng.gen_range(0.5..1.5) * if rng.gen() { 1.0 } else { -1.0 })
        .collect()
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest eigenvalue of a symmetric PSD operator `apply: x ↦ Mx`.
///
/// Returns `(λ_max, eigenvector, iterations)`. `start` is normalised in place
/// and used as the initial guess.
pub fn power_iteration(
    mut start: Vec<f64>,
    mut apply: impl FnMut(&[f64], &mut [f64]),
) -> Result<(f64, Vec<f64>, usize)> {
    let n = start.len();
    let norm = norm2(&start);
    if n == 0 || norm == 0.0 {
        return Ok((0.0, start, 0));
    }
    start.iter_mut().for_each(|v| *v /= norm);
    let mut x = start;
    let mut y = vec![0.0; n];
    let mut previous = f64::NAN;
    for iteration in 1..=MAX_ITERATIONS {
        apply(&x, &mut y);
        let rayleigh: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let size = norm2(&y);
        if size == 0.0 {
            return Ok((0.0, x, iteration));
        }
        if (rayleigh - previous).abs() <= RAYLEIGH_TOLERANCE * rayleigh.abs() {
            return Ok((rayleigh.max(0.0), x, iteration));
        }
        previous = rayleigh;
        for (a, b) in x.iter_mut().zip(&y) {
            *a = b / size;
        }
    }
    Err(Error::EigenFailure {
        iterations: MAX_ITERATIONS,
    })
}

/// The pair `(A, B)` with `⟨Af,f⟩ = ‖S_w f‖²_{L²(v)}` and `⟨Bf,f⟩ = ‖f‖²_{L²(u)}`
/// in the leaf basis (coordinates are leaf values).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFormPair {
    pub dimension: usize,
    /// Row-major, `dimension × dimension`.
    pub numerator: Vec<f64>,
    /// Diagonal of `B`: `u_k 2^{-N}`.
    pub denominator: Vec<f64>,
}

impl QuadraticFormPair {
    /// Dense assembly `A = Σ_I K_I c_I c_Iᵀ`, `c_I[k] = h_I^w(k) w_k 2^{-N}`.
    pub fn square_function(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<Self> {
        check_same_tree(u.tree(), w.tree())?;
        let tree = w.tree();
        let n = tree.leaf_count();
        let cell = tree.cell_length();
        let k = k_coefficients(w, v)?;
        let mut numerator = vec![0.0; n * n];
        for (h, profile) in haar_vectors(w).into_iter().enumerate() {
            let f = profile.to_function(tree);
            let range = profile.interval.leaf_range(tree.depth());
            let c: Vec<f64> = range.clone().map(|j| f.leaves()[j] * w.leaves()[j] * cell).collect();
            for (a, ra) in range.clone().enumerate() {
                for (b, rb) in range.clone().enumerate() {
                    numerator[ra * n + rb] += k[h] * c[a] * c[b];
                }
            }
        }
        Ok(QuadraticFormPair {
            dimension: n,
            numerator,
            denominator: u.leaves().iter().map(|x| x * cell).collect(),
        })
    }

    pub fn numerator_form(&self, f: &[f64]) -> f64 {
        let n = self.dimension;
        (0..n)
            .map(|i| f[i] * (0..n).map(|j| self.numerator[i * n + j] * f[j]).sum::<f64>())
            .sum()
    }

    pub fn denominator_form(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.denominator).map(|(x, b)| x * x * b).sum()
    }

    /// `B^{-1/2} A B^{-1/2}`, row-major.
    pub fn reduced(&self) -> Vec<f64> {
        let n = self.dimension;
        let s: Vec<f64> = self.denominator.iter().map(|b| b.sqrt().recip()).collect();
        let mut m = self.numerator.clone();
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] *= s[i] * s[j];
            }
        }
        m
    }
}

/// `‖S_w‖_{L²(u)→L²(v)}` as the square root of the top generalised eigenvalue of `(A, B)`.
///
/// `A` is applied matrix-free through the weighted Haar transform, so each
/// iteration costs `O(N·2^N)`.
pub fn square_function_norm(u: &StepWeight, v: &StepWeight, w: &StepWeight) -> Result<NormResult> {
    check_same_tree(u.tree(), w.tree())?;
    check_same_tree(v.tree(), w.tree())?;
    let tree = w.tree();
    let cell = tree.cell_length();
    let k = k_coefficients(w, v)?;
    let profiles = haar_vectors(w);
    let scale: Vec<f64> = u.leaves().iter().map(|x| (x * cell).sqrt().recip()).collect();
    let depth = tree.depth();
    let mut scratch = StepFunction::zeros(tree);
    let apply = |y: &[f64], out: &mut [f64]| {
        for ((s, a), b) in scratch.leaves_mut().iter_mut().zip(y).zip(&scale) {
            *s = a * b;
        }
        let coefficients = haar_coefficients(&scratch, w).expect("same tree");
        out.iter_mut().for_each(|o| *o = 0.0);
        for (h, profile) in profiles.iter().enumerate() {
            let amount = k[h] * coefficients[h];
            if amount == 0.0 {
                continue;
            }
            let range = profile.interval.leaf_range(depth);
            let mid = range.start + range.len() / 2;
            for o in &mut out[range.start..mid] {
                *o += amount * profile.minus_value;
            }
            for o in &mut out[mid..range.end] {
                *o += amount * profile.plus_value;
            }
        }
        for ((o, b), wj) in out.iter_mut().zip(&scale).zip(w.leaves()) {
            *o *= wj * cell * b;
        }
    };
    let (lambda, _, iterations) = power_iteration(start_vector(tree.leaf_count()), apply)?;
    Ok(NormResult {
        value: lambda.sqrt(),
        method: NormMethod::Eigen,
        iterations,
        depth,
    })
}

/// Images of the leaf indicators, `columns[k] = T(𝟙_{leaf k})`.
fn operator_columns(tree: DyadicTree, op: &impl Fn(&StepFunction) -> Result<StepFunction>) -> Result<Vec<Vec<f64>>> {
    (0..tree.leaf_count())
        .map(|k| {
            let image = op(&StepFunction::unit(tree, k))?;
            check_same_tree(tree, image.tree())?;
            Ok(image.into_leaves())
        })
        .collect()
}

/// Checks `T(af + bg) = aTf + bTg` on fixed pseudo-random inputs.
fn linearity_probe(tree: DyadicTree, op: &impl Fn(&StepFunction) -> Result<StepFunction>) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11_ea_57);
    let mut random = || {
        let leaves = (0..tree.leaf_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        StepFunction::new(tree, leaves)
    };
    let (f, g) = (random()?, random()?);
    let (a, b) = (0.75, -1.25);
    let combined = op(&(&(&f * a) + &(&g * b)))?;
    let expected = &(&op(&f)? * a) + &(&op(&g)? * b);
    let scale = expected.leaves().iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let defect = combined.max_abs_diff(&expected) / scale;
    if defect > LINEARITY_TOLERANCE {
        return Err(Error::NonlinearOperator(defect));
    }
    Ok(())
}

/// `C = diag(√v) T diag(1/√u)`, row-major; `‖T‖_{L²(u)→L²(v)} = ‖C‖₂`.
fn conjugated(columns: &[Vec<f64>], u: &StepWeight, v: &StepWeight) -> Vec<f64> {
    let n = columns.len();
    let mut c = vec![0.0; n * n];
    for (k, column) in columns.iter().enumerate() {
        let right = u.leaves()[k].sqrt().recip();
        for (j, value) in column.iter().enumerate() {
            c[j * n + k] = v.leaves()[j].sqrt() * value * right;
        }
    }
    c
}

/// Largest singular value of a square row-major matrix via power iteration on `CᵀC`.
fn spectral_norm(c: &[f64], start: Vec<f64>) -> Result<(f64, Vec<f64>, usize)> {
    let n = start.len();
    let mut tmp = vec![0.0; n];
    let (lambda, x, iterations) = power_iteration(start, |x, out| {
        for (i, t) in tmp.iter_mut().enumerate() {
            *t = c[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, t) in tmp.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(&c[i * n..(i + 1) * n]) {
                *o += a * t;
            }
        }
    })?;
    Ok((lambda.sqrt(), x, iterations))
}

/// `‖T‖_{L²(u)→L²(v)}` for a linear operator given as a closure on step functions.
///
/// The operator is applied to the `2^N` leaf indicators after a linearity probe.
pub fn linear_operator_norm(
    op: impl Fn(&StepFunction) -> Result<StepFunction>,
    u: &StepWeight,
    v: &StepWeight,
) -> Result<NormResult> {
    check_same_tree(u.tree(), v.tree())?;
    let tree = u.tree();
    linearity_probe(tree, &op)?;
    let columns = operator_columns(tree, &op)?;
    let c = conjugated(&columns, u, v);
    let (value, _, iterations) = spectral_norm(&c, start_vector(tree.leaf_count()))?;
    Ok(NormResult {
        value,
        method: NormMethod::Eigen,
        iterations,
        depth: tree.depth(),
    })
}

/// `‖T^t_{w,σ}‖_{L²(u)→L²(v)}` for one sign pattern.
pub fn haar_multiplier_norm(multiplier: &HaarMultiplier, u: &StepWeight, v: &StepWeight) -> Result<NormResult> {
    linear_operator_norm(|f| multiplier.apply(f), u, v)
}

/// `‖P_{w,λ}‖_{L²(u)→L²(v)}`.
pub fn positive_operator_norm(
    w: &StepWeight,
    lambda: &CarlesonSequence,
    u: &StepWeight,
    v: &StepWeight,
) -> Result<NormResult> {
    linear_operator_norm(|f| positive_operator(w, lambda, f), u, v)
}

/// `sup_σ ‖T^t_{w,σ}‖_{L²(u)→L²(v)}` with a maximising pattern.
///
/// `T_{w,-σ} = -T_{w,σ}`, so the root sign is fixed to `+1`. With at most
/// [`EXHAUSTIVE_SIGNS`] free signs every pattern is visited in Gray-code order,
/// updating the conjugated matrix by one rank-one term per step and
/// warm-starting each power iteration. Otherwise `budget.samples` seeded random
/// patterns plus the all-`+` pattern are tried and the result is a lower bound.
pub fn uniform_sigma_norm(
    w: &StepWeight,
    t: f64,
    u: &StepWeight,
    v: &StepWeight,
    budget: SamplingBudget,
) -> Result<(NormResult, SignPattern)> {
    check_same_tree(u.tree(), w.tree())?;
    check_same_tree(v.tree(), w.tree())?;
    let tree = w.tree();
    let n = tree.leaf_count();
    let m = tree.non_leaf_count();

    // Rank-one pieces C_I = p_I q_Iᵀ of the conjugated matrix, one per interval:
    // T_I 𝟙_k = h_I(k) 2^{-N} (w/⟨w⟩_I)^t h_I.
    let cell = tree.cell_length();
    let depth = tree.depth();
    let pieces: Vec<Vec<f64>> = tree
        .non_leaf()
        .map(|i| {
            let haar = plain_haar(tree, &i).expect("non-leaf").to_function(tree);
            let avg = w.average(&i).expect("in tree");
            let range = i.leaf_range(depth);
            let mut c = vec![0.0; n * n];
            for j in range.clone() {
                let p = v.leaves()[j].sqrt() * (w.leaves()[j] / avg).powf(t) * haar.leaves()[j];
                for k in range.clone() {
                    c[j * n + k] = p * haar.leaves()[k] * cell / u.leaves()[k].sqrt();
                }
            }
            c
        })
        .collect();

    let matrix_for = |signs: &SignPattern| -> Vec<f64> {
        let mut c = vec![0.0; n * n];
        for (piece, &s) in pieces.iter().zip(signs.signs()) {
            for (a, b) in c.iter_mut().zip(piece) {
                *a += f64::from(s) * b;
            }
        }
        c
    };

    let free = m - 1;
    let mut best = f64::NEG_INFINITY;
    let mut best_pattern = SignPattern::all_plus(tree);
    let mut total_iterations = 0;

    if free <= EXHAUSTIVE_SIGNS {
        let mut signs = SignPattern::all_plus(tree);
        let mut c = matrix_for(&signs);
        let mut x = start_vector(n);
        for step in 0u64..(1u64 << free) {
            if step > 0 {
                // Gray code: flip the sign at the lowest set bit of `step`, offset past the root.
                let h = step.trailing_zeros() as usize + 1;
                let s = -signs.signs()[h];
                signs.flip(&DyadicIndex::from_heap_index(h))?;
                for (a, b) in c.iter_mut().zip(&pieces[h]) {
                    *a += 2.0 * f64::from(s) * b;
                }
            }
            let (value, vector, iterations) = spectral_norm(&c, x)?;
            x = vector;
            total_iterations += iterations;
            if value > best {
                best = value;
                best_pattern = signs.clone();
            }
        }
        return Ok((
            NormResult {
                value: best,
                method: NormMethod::Exhaustive,
                iterations: total_iterations,
                depth: tree.depth(),
            },
            best_pattern,
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut candidates = vec![SignPattern::all_plus(tree)];
    for _ in 0..budget.samples {
        let signs = (0..m)
            .map(|h| if h == 0 || rng.gen::<bool>() { 1 } else { -1 })
            .collect();
        candidates.push(SignPattern::new(tree, signs)?);
    }
    for signs in candidates {
        let (value, _, iterations) = spectral_norm(&matrix_for(&signs), start_vector(n))?;
        total_iterations += iterations;
        if value > best {
            best = value;
            best_pattern = signs;
        }
    }
    Ok((
        NormResult {
            value: best,
            method: NormMethod::Sampled,
            iterations: total_iterations,
            depth: tree.depth(),
        },
        best_pattern,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::square_function;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn tree(depth: u32) -> DyadicTree {
        DyadicTree::new(depth).unwrap()
    }

    fn weight(t: DyadicTree, salt: usize) -> StepWeight {
        StepWeight::from_fn(t, |k| 0.2 + (((k + salt) * 2654435761) % 97) as f64 / 13.0).unwrap()
    }

    fn dense_top_eigenvalue(m: &[f64], n: usize) -> f64 {
        let matrix = DMatrix::from_row_slice(n, n, m);
        SymmetricEigen::new(matrix).eigenvalues.max()
    }

    #[test]
    fn trivial_square_function_norm() {
        let one = StepWeight::ones(tree(1));
        let r = square_function_norm(&one, &one, &one).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
        assert_eq!(r.method, NormMethod::Eigen);
    }

    #[test]
    fn square_function_norm_matches_dense_eigen() {
        for depth in 1..=5 {
            let t = tree(depth);
            let (u, v, w) = (weight(t, 1), weight(t, 2), weight(t, 3));
            let pair = QuadraticFormPair::square_function(&u, &v, &w).unwrap();
            let expected = dense_top_eigenvalue(&pair.reduced(), pair.dimension).sqrt();
            let got = square_function_norm(&u, &v, &w).unwrap().value;
            assert_relative_eq!(got, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn quadratic_form_matches_operator() {
        let t = tree(4);
        let (u, v, w) = (weight(t, 4), weight(t, 5), weight(t, 6));
        let pair = QuadraticFormPair::square_function(&u, &v, &w).unwrap();
        let f = StepFunction::from_fn(t, |k| ((k * 7) % 5) as f64 - 2.0).unwrap();
        let direct = square_function(&w, &f).unwrap().norm_sq(&v);
        assert_relative_eq!(pair.numerator_form(f.leaves()), direct, max_relative = 1e-12);
        assert_relative_eq!(pair.denominator_form(f.leaves()), f.norm_sq(&u), max_relative = 1e-14);
    }

    #[test]
    fn homogeneity() {
        let t = tree(3);
        let (u, v, w) = (weight(t, 7), weight(t, 8), weight(t, 9));
        let base = square_function_norm(&u, &v, &w).unwrap().value;
        let v4 = v.scale(4.0).unwrap();
        let u4 = u.scale(4.0).unwrap();
        assert_relative_eq!(
            square_function_norm(&u, &v4, &w).unwrap().value,
            2.0 * base,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            square_function_norm(&u4, &v, &w).unwrap().value,
            0.5 * base,
            max_relative = 1e-10
        );
    }

    #[test]
    fn identity_and_projection_norms() {
        let t = tree(3);
        let u = weight(t, 11);
        let r = linear_operator_norm(|f| Ok(f.clone()), &u, &u).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-10);
        let one = StepWeight::ones(t);
        let mt = HaarMultiplier::martingale(SignPattern::all_plus(t));
        assert_relative_eq!(
            haar_multiplier_norm(&mt, &one, &one).unwrap().value,
            1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn nonlinear_operator_rejected() {
        let t = tree(2);
        let one = StepWeight::ones(t);
        let r = linear_operator_norm(|f| Ok(f.map(|x| x * x)), &one, &one);
        assert!(matches!(r, Err(Error::NonlinearOperator(_))));
    }

    #[test]
    fn haar_multiplier_norm_matches_svd() {
        let t = tree(1);
        let one = StepWeight::ones(t);
        let w = StepWeight::new(t, vec![1.0, 3.0]).unwrap();
        let tw = HaarMultiplier::t_w(w);
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|k| tw.apply(&StepFunction::unit(t, k)).unwrap().into_leaves())
            .collect();
        let m = DMatrix::from_fn(2, 2, |i, j| cols[j][i]);
        let expected = m.singular_values().max();
        assert_relative_eq!(
            haar_multiplier_norm(&tw, &one, &one).unwrap().value,
            expected,
            max_relative = 1e-10
        );
    }

    #[test]
    fn sigma_sup_examples() {
        let t = tree(3);
        let one = StepWeight::ones(t);
        let (r, _) = uniform_sigma_norm(&one, 0.0, &one, &one, SamplingBudget::default()).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-10);
        assert_eq!(r.method, NormMethod::Exhaustive);

        let t1 = tree(1);
        let w = StepWeight::new(t1, vec![1.0, 3.0]).unwrap();
        let u = StepWeight::new(t1, vec![2.0, 1.0]).unwrap();
        let (r, _) = uniform_sigma_norm(&w, 1.0, &u, &u, SamplingBudget::default()).unwrap();
        let plus = HaarMultiplier::t_w(w.clone());
        let minus = HaarMultiplier::new(w, 1.0, SignPattern::constant(t1, -1).unwrap()).unwrap();
        let a = haar_multiplier_norm(&plus, &u, &u).unwrap().value;
        let b = haar_multiplier_norm(&minus, &u, &u).unwrap().value;
        assert_relative_eq!(r.value, a.max(b), max_relative = 1e-10);
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }

    /// Gray-code search agrees with recomputing each pattern from scratch.
    #[test]
    fn sigma_search_matches_direct() {
        let t = tree(2);
        let (u, v, w) = (weight(t, 1), weight(t, 2), weight(t, 3));
        let (r, pattern) = uniform_sigma_norm(&w, 1.0, &u, &v, SamplingBudget::default()).unwrap();
        let mut best: f64 = 0.0;
        for bits in 0..8u64 {
            let signs = SignPattern::from_bits(t, bits);
            let op = HaarMultiplier::new(w.clone(), 1.0, signs).unwrap();
            best = best.max(haar_multiplier_norm(&op, &u, &v).unwrap().value);
        }
        assert_relative_eq!(r.value, best, max_relative = 1e-9);
        let op = HaarMultiplier::new(w, 1.0, pattern).unwrap();
        assert_relative_eq!(
            haar_multiplier_norm(&op, &u, &v).unwrap().value,
            r.value,
            max_relative = 1e-9
        );
        assert_eq!(r.depth, 2);
    }

    #[test]
    fn sampled_mode_at_depth_five() {
        let t = tree(5);
        let one = StepWeight::ones(t);
        let budget = SamplingBudget { samples: 4, seed: 3 };
        let (r, _) = uniform_sigma_norm(&one, 0.0, &one, &one, budget).unwrap();
        assert_eq!(r.method, NormMethod::Sampled);
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-10);
    }
}
