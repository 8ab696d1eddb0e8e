//! Sparse vectors over a feature or label space.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// An index→weight map stored as entries sorted by index.
///
/// Entries with weight exactly zero are never stored, and indices are unique.
/// This is the universal numeric carrier for document features, TF-IDF
/// vectors, label embeddings, and classifier weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f32)>,
}

impl SparseVector {
    pub fn new() -> Self {
        SparseVector::default()
    }

    /// Builds a vector from arbitrary (index, weight) pairs.
    ///
    /// Pairs are sorted by index; zero weights are dropped. A duplicate
    /// index is an error.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f32)>) -> Result<Self> {
        let mut entries: Vec<(u32, f32)> = pairs.into_iter().filter(|&(_, v)| v != 0.0).collect();
        entries.sort_unstable_by_key(|&(i, _)| i);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateIndex { index: w[0].0 });
            }
        }
        Ok(SparseVector { entries })
    }

    /// Builds a vector from pairs already sorted by strictly increasing index.
    pub(crate) fn from_sorted(entries: Vec<(u32, f32)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, v)| v != 0.0));
        SparseVector { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f32)> + '_ {
        self.entries.iter().copied()
    }

    pub fn entries(&self) -> &[(u32, f32)] {
        &self.entries
    }

    pub fn get(&self, index: u32) -> f32 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Largest index present, if any.
    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|&(i, _)| i)
    }

    /// Dot product by merging the two sorted entry lists.
    pub fn dot(&self, other: &SparseVector) -> f32 {
        let (mut a, mut b) = (self.entries.iter(), other.entries.iter());
        let (mut x, mut y) = (a.next(), b.next());
        let mut sum = 0.0f32;
        while let (Some(&(i, u)), Some(&(j, v))) = (x, y) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => x = a.next(),
                std::cmp::Ordering::Greater => y = b.next(),
                std::cmp::Ordering::Equal => {
                    sum += u * v;
                    x = a.next();
                    y = b.next();
                }
            }
        }
        sum
    }

    pub fn l1_norm(&self) -> f32 {
        self.entries.iter().map(|&(_, v)| v.abs()).sum()
    }

    pub fn l2_norm(&self) -> f32 {
        self.entries
            .iter()
            .map(|&(_, v)| v * v)
            .sum::<f32>()
            .sqrt()
    }

    /// Returns a copy scaled to unit L2 norm; the zero vector stays zero.
    pub fn l2_normalized(&self) -> SparseVector {
        let norm = self.l2_norm();
        if norm == 0.0 {
            return self.clone();
        }
        self.scaled(1.0 / norm)
    }

    pub fn scaled(&self, factor: f32) -> SparseVector {
        SparseVector {
            entries: self
                .entries
                .iter()
                .map(|&(i, v)| (i, v * factor))
                .collect(),
        }
    }

    /// True when every stored weight is a non-negative integer value.
    pub fn all_integral(&self) -> bool {
        self.entries.iter().all(|&(_, v)| v >= 0.0 && v.fract() == 0.0)
    }
}

/// Deterministic accumulator for summing scaled sparse vectors.
///
/// The per-index sum is performed in the order vectors are added, so a fixed
/// feed order (e.g. by document id) yields bit-identical results.
#[derive(Debug, Default)]
pub struct SparseAccumulator {
    values: std::collections::HashMap<u32, f32>,
}

impl SparseAccumulator {
    pub fn new() -> Self {
        SparseAccumulator::default()
    }

    pub fn add_scaled(&mut self, v: &SparseVector, factor: f32) {
        for (i, x) in v.iter() {
            *self.values.entry(i).or_insert(0.0) += x * factor;
        }
    }

    pub fn into_vector(self) -> SparseVector {
        let mut entries: Vec<(u32, f32)> =
            self.values.into_iter().filter(|&(_, v)| v != 0.0).collect();
        entries.sort_unstable_by_key(|&(i, _)| i);
        SparseVector { entries }
    }
}
