//! Finite dyadic tree on `[0, 1)` with step weights and step functions.
//!
//! Intervals are stored in heap order: level by level, left to right, so the
//! interval `(level, position)` lives at `2^level - 1 + position` and the
//! children of heap slot `i` are `2i + 1` (left) and `2i + 2` (right).

use std::fmt;
use std::ops::{Add, Mul, Neg, Range, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported tree depth. Dense operator matrices are `4^depth` in size.
pub const MAX_DEPTH: u32 = 12;

/// Depth used when nothing else fixes one.
pub const DEFAULT_DEPTH: u32 = 8;

/// The dyadic interval `[k 2^-j, (k + 1) 2^-j)` with `j = level`, `k = position`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub level: u32,
    pub position: usize,
}

impl DyadicIndex {
    pub const ROOT: DyadicIndex = DyadicIndex { level: 0, position: 0 };

    pub fn new(level: u32, position: usize) -> Self {
        DyadicIndex { level, position }
    }

    /// Lebesgue length `|I| = 2^-level`.
    pub fn length(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn parent(&self) -> Option<DyadicIndex> {
        (self.level > 0).then(|| DyadicIndex::new(self.level - 1, self.position >> 1))
    }

    pub fn sibling(&self) -> Option<DyadicIndex> {
        (self.level > 0).then(|| DyadicIndex::new(self.level, self.position ^ 1))
    }

    /// Left child `I⁻`. Does not check the tree depth.
    pub fn left(&self) -> DyadicIndex {
        DyadicIndex::new(self.level + 1, self.position << 1)
    }

    /// Right child `I⁺`. Does not check the tree depth.
    pub fn right(&self) -> DyadicIndex {
        DyadicIndex::new(self.level + 1, (self.position << 1) | 1)
    }

    pub fn is_right_child(&self) -> bool {
        self.level > 0 && self.position & 1 == 1
    }

    pub fn heap_index(&self) -> usize {
        (1usize << self.level) - 1 + self.position
    }

    pub fn from_heap_index(index: usize) -> DyadicIndex {
        let level = usize::BITS - 1 - (index + 1).leading_zeros();
        DyadicIndex::new(level, index + 1 - (1usize << level))
    }

    /// Whether `other ⊆ self`.
    pub fn contains(&self, other: &DyadicIndex) -> bool {
        other.level >= self.level && other.position >> (other.level - self.level) == self.position
    }

    /// Leaf cells covered by this interval in a tree of the given depth.
    pub fn leaf_range(&self, depth: u32) -> Range<usize> {
        let shift = depth - self.level;
        (self.position << shift)..((self.position + 1) << shift)
    }

    /// The `"j,k"` key used in JSON interval maps.
    pub fn key(&self) -> String {
        format!("{},{}", self.level, self.position)
    }
}

impl fmt::Display for DyadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.level, self.position)
    }
}

impl FromStr for DyadicIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (j, k) = trimmed
            .split_once(',')
            .ok_or_else(|| Error::Spec(format!("interval key `{s}` is not of the form `j,k`")))?;
        let level = j
            .trim()
            .parse()
            .map_err(|_| Error::Spec(format!("bad level in interval key `{s}`")))?;
        let position = k
            .trim()
            .parse()
            .map_err(|_| Error::Spec(format!("bad position in interval key `{s}`")))?;
        Ok(DyadicIndex::new(level, position))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Parent,
    Sibling,
    Left,
    Right,
}

/// The intervals of `[0, 1)` down to a fixed depth `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicTree {
    depth: u32,
}

impl DyadicTree {
    pub fn new(depth: u32) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::DepthOutOfRange { depth, max: MAX_DEPTH });
        }
        Ok(DyadicTree { depth })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn leaf_count(&self) -> usize {
        1 << self.depth
    }

    pub fn interval_count(&self) -> usize {
        (1 << (self.depth + 1)) - 1
    }

    pub fn non_leaf_count(&self) -> usize {
        (1 << self.depth) - 1
    }

    /// Length of a leaf cell, `2^-N`.
    pub fn cell_length(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn contains(&self, index: &DyadicIndex) -> bool {
        index.level <= self.depth && index.position < (1usize << index.level)
    }

    pub fn check(&self, index: &DyadicIndex) -> Result<()> {
        if self.contains(index) {
            Ok(())
        } else {
            Err(Error::OutOfTree(*index))
        }
    }

    pub fn is_leaf(&self, index: &DyadicIndex) -> bool {
        index.level == self.depth
    }

    /// Checks membership and that the interval has children.
    pub fn check_non_leaf(&self, index: &DyadicIndex) -> Result<()> {
        self.check(index)?;
        if self.is_leaf(index) {
            Err(Error::LeafInterval(*index))
        } else {
            Ok(())
        }
    }

    pub fn navigate(&self, index: &DyadicIndex, relation: Relation) -> Result<DyadicIndex> {
        self.check(index)?;
        let target = match relation {
            Relation::Parent => index.parent(),
            Relation::Sibling => index.sibling(),
            Relation::Left => (!self.is_leaf(index)).then(|| index.left()),
            Relation::Right => (!self.is_leaf(index)).then(|| index.right()),
        };
        target.ok_or(Error::OutOfTree(*index))
    }

    /// All intervals in heap order.
    pub fn intervals(&self) -> impl Iterator<Item = DyadicIndex> {
        (0..self.interval_count()).map(DyadicIndex::from_heap_index)
    }

    /// Intervals with children (levels `0..N`).
    pub fn non_leaf(&self) -> impl Iterator<Item = DyadicIndex> {
        (0..self.non_leaf_count()).map(DyadicIndex::from_heap_index)
    }

    /// Intervals with a parent (levels `1..=N`).
    pub fn with_parent(&self) -> impl Iterator<Item = DyadicIndex> {
        (1..self.interval_count()).map(DyadicIndex::from_heap_index)
    }

    pub fn leaves(&self) -> impl Iterator<Item = DyadicIndex> {
        let depth = self.depth;
        (0..self.leaf_count()).map(move |k| DyadicIndex::new(depth, k))
    }

    /// `𝒟(J)`: all tree intervals contained in `J`, coarsest first.
    pub fn subtree(&self, root: DyadicIndex) -> impl Iterator<Item = DyadicIndex> {
        let depth = self.depth;
        (root.level..=depth).flat_map(move |level| {
            let shift = level - root.level;
            ((root.position << shift)..((root.position + 1) << shift))
                .map(move |position| DyadicIndex::new(level, position))
        })
    }

    /// Integrals `∫_I g` over every interval, heap-indexed, for a step function
    /// with the given leaf values.
    pub fn integrals(&self, leaves: &[f64]) -> Vec<f64> {
        debug_assert_eq!(leaves.len(), self.leaf_count());
        let cell = self.cell_length();
        let mut sums = vec![0.0; self.interval_count()];
        let offset = self.non_leaf_count();
        for (slot, value) in sums[offset..].iter_mut().zip(leaves) {
            *slot = value * cell;
        }
        for i in (0..offset).rev() {
            sums[i] = sums[2 * i + 1] + sums[2 * i + 2];
        }
        sums
    }

    /// Sums a per-interval quantity over each subtree: `out[J] = Σ_{I ∈ 𝒟(J)} terms[I]`.
    pub fn subtree_sums(&self, terms: &[f64]) -> Vec<f64> {
        debug_assert_eq!(terms.len(), self.interval_count());
        let mut sums = terms.to_vec();
        for i in (0..self.non_leaf_count()).rev() {
            sums[i] += sums[2 * i + 1] + sums[2 * i + 2];
        }
        sums
    }
}

fn check_leaf_count(tree: &DyadicTree, leaves: &[f64]) -> Result<()> {
    if leaves.len() != tree.leaf_count() {
        return Err(Error::LeafCount {
            expected: tree.leaf_count(),
            found: leaves.len(),
        });
    }
    Ok(())
}

/// A strictly positive weight, constant on each leaf cell, with interval masses
/// `w(I)` cached bottom-up.
#[derive(Clone, Debug, PartialEq)]
pub struct StepWeight {
    tree: DyadicTree,
    leaves: Vec<f64>,
    masses: Vec<f64>,
}

impl StepWeight {
    pub fn new(tree: DyadicTree, leaves: Vec<f64>) -> Result<Self> {
        check_leaf_count(&tree, &leaves)?;
        if let Some((index, &value)) = leaves.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NonPositiveLeaf { index, value });
        }
        let masses = tree.integrals(&leaves);
        Ok(StepWeight { tree, leaves, masses })
    }

    pub fn constant(tree: DyadicTree, value: f64) -> Result<Self> {
        StepWeight::new(tree, vec![value; tree.leaf_count()])
    }

    pub fn ones(tree: DyadicTree) -> Self {
        StepWeight::constant(tree, 1.0).expect("unit weight is valid")
    }

    /// Builds a weight from a function of the leaf position `k`.
    pub fn from_fn(tree: DyadicTree, f: impl Fn(usize) -> f64) -> Result<Self> {
        StepWeight::new(tree, (0..tree.leaf_count()).map(f).collect())
    }

    pub fn tree(&self) -> DyadicTree {
        self.tree
    }

    pub fn depth(&self) -> u32 {
        self.tree.depth
    }

    pub fn leaves(&self) -> &[f64] {
        &self.leaves
    }

    /// Heap-indexed masses `w(I)`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, index: &DyadicIndex) -> Result<f64> {
        self.tree.check(index)?;
        Ok(self.masses[index.heap_index()])
    }

    /// `⟨w⟩_I = w(I)/|I|`.
    pub fn average(&self, index: &DyadicIndex) -> Result<f64> {
        Ok(self.mass(index)? / index.length())
    }

    /// Heap-indexed averages `⟨w⟩_I` for every interval.
    pub fn averages(&self) -> Vec<f64> {
        self.masses
            .iter()
            .enumerate()
            .map(|(i, m)| m / DyadicIndex::from_heap_index(i).length())
            .collect()
    }

    pub(crate) fn mass_at(&self, index: &DyadicIndex) -> f64 {
        self.masses[index.heap_index()]
    }

    pub(crate) fn average_at(&self, index: &DyadicIndex) -> f64 {
        self.masses[index.heap_index()] / index.length()
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Result<StepWeight> {
        StepWeight::new(self.tree, self.leaves.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise power `w^exponent`.
    pub fn powf(&self, exponent: f64) -> Result<StepWeight> {
        self.map(|v| v.powf(exponent))
    }

    /// Pointwise reciprocal `w^-1`.
    pub fn recip(&self) -> StepWeight {
        self.map(f64::recip)
            .expect("reciprocal of a positive weight is positive")
    }

    pub fn scale(&self, factor: f64) -> Result<StepWeight> {
        self.map(|v| v * factor)
    }

    /// Pointwise product of two weights on the same tree.
    pub fn product(&self, other: &StepWeight) -> Result<StepWeight> {
        check_same_tree(self.tree, other.tree)?;
        StepWeight::new(
            self.tree,
            self.leaves.iter().zip(&other.leaves).map(|(a, b)| a * b).collect(),
        )
    }

    /// Splits every leaf into two equal-valued leaves.
    pub fn refine(&self) -> Result<StepWeight> {
        let tree = DyadicTree::new(self.tree.depth + 1)?;
        StepWeight::new(tree, refine_leaves(&self.leaves))
    }

    /// Reflection `x ↦ 1 - x`.
    pub fn mirror(&self) -> StepWeight {
        let leaves = self.leaves.iter().rev().copied().collect();
        StepWeight::new(self.tree, leaves).expect("mirror keeps positivity")
    }

    pub fn to_function(&self) -> StepFunction {
        StepFunction {
            tree: self.tree,
            leaves: self.leaves.clone(),
        }
    }

    pub fn min_leaf(&self) -> f64 {
        self.leaves.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_leaf(&self) -> f64 {
        self.leaves.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn check_same_tree(a: DyadicTree, b: DyadicTree) -> Result<()> {
    if a.depth != b.depth {
        return Err(Error::DepthMismatch {
            expected: a.depth,
            found: b.depth,
        });
    }
    Ok(())
}

fn refine_leaves(leaves: &[f64]) -> Vec<f64> {
    leaves.iter().flat_map(|&v| [v, v]).collect()
}

/// A real-valued function, constant on each leaf cell.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    tree: DyadicTree,
    leaves: Vec<f64>,
}

impl StepFunction {
    pub fn new(tree: DyadicTree, leaves: Vec<f64>) -> Result<Self> {
        check_leaf_count(&tree, &leaves)?;
        if let Some((index, &value)) = leaves.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteLeaf { index, value });
        }
        Ok(StepFunction { tree, leaves })
    }

    pub fn zeros(tree: DyadicTree) -> Self {
        StepFunction {
            tree,
            leaves: vec![0.0; tree.leaf_count()],
        }
    }

    pub fn constant(tree: DyadicTree, value: f64) -> Self {
        StepFunction {
            tree,
            leaves: vec![value; tree.leaf_count()],
        }
    }

    /// The characteristic function `𝟙_I`.
    pub fn indicator(tree: DyadicTree, index: &DyadicIndex) -> Result<Self> {
        tree.check(index)?;
        let mut f = StepFunction::zeros(tree);
        f.leaves[index.leaf_range(tree.depth)].fill(1.0);
        Ok(f)
    }

    /// The indicator of a single leaf cell.
    pub fn unit(tree: DyadicTree, leaf: usize) -> Self {
        let mut f = StepFunction::zeros(tree);
        f.leaves[leaf] = 1.0;
        f
    }

    pub fn from_fn(tree: DyadicTree, f: impl Fn(usize) -> f64) -> Result<Self> {
        StepFunction::new(tree, (0..tree.leaf_count()).map(f).collect())
    }

    pub fn tree(&self) -> DyadicTree {
        self.tree
    }

    pub fn leaves(&self) -> &[f64] {
        &self.leaves
    }

    pub fn into_leaves(self) -> Vec<f64> {
        self.leaves
    }

    pub(crate) fn leaves_mut(&mut self) -> &mut [f64] {
        &mut self.leaves
    }

    /// Pointwise product with a weight.
    pub fn times_weight(&self, weight: &StepWeight) -> Result<StepFunction> {
        check_same_tree(self.tree, weight.tree())?;
        Ok(StepFunction {
            tree: self.tree,
            leaves: self.leaves.iter().zip(weight.leaves()).map(|(f, w)| f * w).collect(),
        })
    }

    /// Pointwise product with another step function.
    pub fn times(&self, other: &StepFunction) -> Result<StepFunction> {
        check_same_tree(self.tree, other.tree)?;
        Ok(StepFunction {
            tree: self.tree,
            leaves: self.leaves.iter().zip(&other.leaves).map(|(f, g)| f * g).collect(),
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> StepFunction {
        StepFunction {
            tree: self.tree,
            leaves: self.leaves.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Plain average `⟨f⟩_I`.
    pub fn average(&self, index: &DyadicIndex) -> Result<f64> {
        self.tree.check(index)?;
        let range = index.leaf_range(self.tree.depth);
        let len = range.len() as f64;
        Ok(self.leaves[range].iter().sum::<f64>() / len)
    }

    /// `∫ f g w`; pass the unit weight for the Lebesgue inner product.
    pub fn inner(&self, other: &StepFunction, weight: &StepWeight) -> f64 {
        self.leaves
            .iter()
            .zip(&other.leaves)
            .zip(weight.leaves())
            .map(|((f, g), w)| f * g * w)
            .sum::<f64>()
            * self.tree.cell_length()
    }

    /// `‖f‖²_{L²(w)}`.
    pub fn norm_sq(&self, weight: &StepWeight) -> f64 {
        self.inner(self, weight)
    }

    /// Lebesgue `∫ f g`.
    pub fn dot(&self, other: &StepFunction) -> f64 {
        self.leaves.iter().zip(&other.leaves).map(|(f, g)| f * g).sum::<f64>() * self.tree.cell_length()
    }

    pub fn refine(&self) -> Result<StepFunction> {
        let tree = DyadicTree::new(self.tree.depth + 1)?;
        StepFunction::new(tree, refine_leaves(&self.leaves))
    }

    pub fn mirror(&self) -> StepFunction {
        StepFunction {
            tree: self.tree,
            leaves: self.leaves.iter().rev().copied().collect(),
        }
    }

    pub fn min_leaf(&self) -> f64 {
        self.leaves.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_leaf(&self) -> f64 {
        self.leaves.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &StepFunction) -> f64 {
        self.leaves
            .iter()
            .zip(&other.leaves)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &StepFunction {
    type Output = StepFunction;

    fn add(self, rhs: &StepFunction) -> StepFunction {
        assert_eq!(self.tree, rhs.tree, "step functions live on different trees");
        StepFunction {
            tree: self.tree,
            leaves: self.leaves.iter().zip(&rhs.leaves).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &StepFunction {
    type Output = StepFunction;

    fn sub(self, rhs: &StepFunction) -> StepFunction {
        assert_eq!(self.tree, rhs.tree, "step functions live on different trees");
        StepFunction {
            tree: self.tree,
            leaves: self.leaves.iter().zip(&rhs.leaves).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<f64> for &StepFunction {
    type Output = StepFunction;

    fn mul(self, rhs: f64) -> StepFunction {
        self.map(|v| v * rhs)
    }
}

impl Neg for &StepFunction {
    type Output = StepFunction;

    fn neg(self) -> StepFunction {
        self.map(|v| -v)
    }
}

/// Heap-indexed weighted averages `⟨f⟩_I^w` for every interval.
pub fn weighted_averages(f: &StepFunction, w: &StepWeight) -> Result<Vec<f64>> {
    let fw = f.times_weight(w)?;
    let tree = w.tree();
    Ok(tree
        .integrals(fw.leaves())
        .into_iter()
        .zip(w.masses())
        .map(|(num, den)| num / den)
        .collect())
}

/// `⟨f⟩_I^w = ∫_I f w / w(I)`.
pub fn weighted_average(f: &StepFunction, w: &StepWeight, index: &DyadicIndex) -> Result<f64> {
    check_same_tree(f.tree(), w.tree())?;
    w.tree().check(index)?;
    let range = index.leaf_range(w.depth());
    let num: f64 = f.leaves()[range.clone()]
        .iter()
        .zip(&w.leaves()[range])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * w.tree().cell_length();
    Ok(num / w.mass_at(index))
}

/// Leaf values in the `{"depth": N, "leaves": [...]}` interchange shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafData {
    pub depth: u32,
    pub leaves: Vec<f64>,
}

impl LeafData {
    pub fn into_weight(self) -> Result<StepWeight> {
        StepWeight::new(DyadicTree::new(self.depth)?, self.leaves)
    }

    pub fn into_function(self) -> Result<StepFunction> {
        StepFunction::new(DyadicTree::new(self.depth)?, self.leaves)
    }
}

impl From<&StepWeight> for LeafData {
    fn from(w: &StepWeight) -> Self {
        LeafData {
            depth: w.depth(),
            leaves: w.leaves().to_vec(),
        }
    }
}

impl From<&StepFunction> for LeafData {
    fn from(f: &StepFunction) -> Self {
        LeafData {
            depth: f.tree().depth(),
            leaves: f.leaves().to_vec(),
        }
    }
}
