//! Sequences indexed by the non-leaf intervals of a tree.

use std::collections::BTreeMap;

use crate::dyadic::{DyadicIndex, DyadicTree};
use crate::error::{Error, Result};

/// Signed reals `b_I` on the non-leaf intervals, heap-indexed.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalCoefficients {
    tree: DyadicTree,
    values: Vec<f64>,
}

impl IntervalCoefficients {
    pub fn new(tree: DyadicTree, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.non_leaf_count() {
            return Err(Error::LeafCount {
                expected: tree.non_leaf_count(),
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteLeaf { index, value });
        }
        Ok(IntervalCoefficients { tree, values })
    }

    pub fn zeros(tree: DyadicTree) -> Self {
        IntervalCoefficients {
            tree,
            values: vec![0.0; tree.non_leaf_count()],
        }
    }

    pub fn from_fn(tree: DyadicTree, f: impl Fn(DyadicIndex) -> f64) -> Result<Self> {
        IntervalCoefficients::new(tree, tree.non_leaf().map(f).collect())
    }

    /// Builds from a `{"j,k": value}` map; missing keys are zero.
    pub fn from_keyed(tree: DyadicTree, entries: &BTreeMap<String, f64>) -> Result<Self> {
        let mut out = IntervalCoefficients::zeros(tree);
        for (key, &value) in entries {
            let index: DyadicIndex = key.parse()?;
            out.set(&index, value)?;
        }
        IntervalCoefficients::new(tree, out.values)
    }

    /// Non-zero entries as a `{"j,k": value}` map.
    pub fn to_keyed(&self) -> BTreeMap<String, f64> {
        self.tree
            .non_leaf()
            .zip(&self.values)
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i.key(), *v))
            .collect()
    }

    pub fn tree(&self) -> DyadicTree {
        self.tree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: &DyadicIndex) -> Result<f64> {
        self.tree.check_non_leaf(index)?;
        Ok(self.values[index.heap_index()])
    }

    pub fn set(&mut self, index: &DyadicIndex, value: f64) -> Result<()> {
        self.tree.check_non_leaf(index)?;
        self.values[index.heap_index()] = value;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (DyadicIndex, f64)> + '_ {
        self.tree.non_leaf().zip(self.values.iter().copied())
    }
}

/// Non-negative `λ_I` on the non-leaf intervals. Leaves carry `λ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CarlesonSequence(IntervalCoefficients);

impl CarlesonSequence {
    pub fn new(tree: DyadicTree, values: Vec<f64>) -> Result<Self> {
        let inner = IntervalCoefficients::new(tree, values)?;
        if let Some((index, &value)) = inner.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::Spec(format!(
                "Carleson sequence entry {} is negative: {value}",
                DyadicIndex::from_heap_index(index)
            )));
        }
        Ok(CarlesonSequence(inner))
    }

    pub fn zeros(tree: DyadicTree) -> Self {
        CarlesonSequence(IntervalCoefficients::zeros(tree))
    }

    pub fn from_fn(tree: DyadicTree, f: impl Fn(DyadicIndex) -> f64) -> Result<Self> {
        CarlesonSequence::new(tree, tree.non_leaf().map(f).collect())
    }

    pub fn tree(&self) -> DyadicTree {
        self.0.tree
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }

    pub fn get(&self, index: &DyadicIndex) -> Result<f64> {
        self.0.get(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = (DyadicIndex, f64)> + '_ {
        self.0.iter()
    }

    /// Values padded with zeros for the leaves, heap-indexed over all intervals.
    pub(crate) fn padded(&self) -> Vec<f64> {
        let mut out = self.0.values.clone();
        out.resize(self.0.tree.interval_count(), 0.0);
        out
    }
}

impl From<CarlesonSequence> for IntervalCoefficients {
    fn from(seq: CarlesonSequence) -> Self {
        seq.0
    }
}
