use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A flat store of labeled points, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Memory {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<u8>,
}

impl Memory {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn from_points<'a>(dim: usize, points: impl IntoIterator<Item = (&'a [f64], u8)>) -> Result<Self> {
        let mut memory = Memory::new(dim);
        for (x, y) in points {
            memory.try_push(x, y)?;
        }
        Ok(memory)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&[f64], u8)> + '_ {
        (0..self.len()).map(move |i| (self.point(i), self.labels[i]))
    }

    pub fn try_push(&mut self, x: &[f64], y: u8) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.push(x, y);
        Ok(())
    }

    pub(crate) fn push(&mut self, x: &[f64], y: u8) {
        debug_assert_eq!(x.len(), self.dim);
        self.features.extend_from_slice(x);
        self.labels.push(y);
    }

    pub(crate) fn append(&mut self, other: &Memory) {
        debug_assert_eq!(other.dim, self.dim);
        self.features.extend_from_slice(&other.features);
        self.labels.extend_from_slice(&other.labels);
    }

    /// Remove and return the `n` oldest points.
    pub(crate) fn drain_front(&mut self, n: usize) -> Memory {
        let n = n.min(self.len());
        Memory {
            dim: self.dim,
            features: self.features.drain(..n * self.dim).collect(),
            labels: self.labels.drain(..n).collect(),
        }
    }

    /// The newest `n` points as a copy.
    pub(crate) fn suffix(&self, n: usize) -> Memory {
        let start = self.len() - n.min(self.len());
        Memory {
            dim: self.dim,
            features: self.features[start * self.dim..].to_vec(),
            labels: self.labels[start..].to_vec(),
        }
    }

    pub(crate) fn retain_mask(&mut self, keep: &[bool]) {
        debug_assert_eq!(keep.len(), self.len());
        let dim = self.dim;
        let mut write = 0;
        for (read, &k) in keep.iter().enumerate() {
            if k {
                if read != write {
                    self.features.copy_within(read * dim..(read + 1) * dim, write * dim);
                    self.labels[write] = self.labels[read];
                }
                write += 1;
            }
        }
        self.features.truncate(write * dim);
        self.labels.truncate(write);
    }
}

/// Squared (optionally weighted) Euclidean distance. `w2` holds squared
/// feature weights.
#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64], w2: Option<&[f64]>) -> f64 {
    match w2 {
        None => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        Some(w) => a
            .iter()
            .zip(b)
            .zip(w)
            .map(|((x, y), w)| w * ((x - y) * (x - y)))
            .sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Neighbor {
    pub dist: f64,
    pub pos: usize,
    pub label: u8,
}

/// The `k` nearest points seen so far, ordered by (distance, position).
#[derive(Debug, Clone)]
pub(crate) struct NearestK {
    k: usize,
    items: Vec<Neighbor>,
}

impl NearestK {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    /// Candidates must be offered in increasing `pos` order so that
    /// equal distances keep the earlier position.
    #[inline]
    pub fn offer(&mut self, n: Neighbor) {
        if self.items.len() == self.k {
            match self.items.last() {
                Some(worst) if n.dist < worst.dist => {}
                _ => return,
            }
        }
        let at = self.items.partition_point(|m| m.dist <= n.dist);
        self.items.insert(at, n);
        self.items.truncate(self.k);
    }

    pub fn worst(&self) -> Option<&Neighbor> {
        self.items.last()
    }

    /// Majority label, ties toward 1. `None` when empty.
    pub fn majority(&self) -> Option<u8> {
        if self.items.is_empty() {
            return None;
        }
        let ones = self.items.iter().filter(|n| n.label == 1).count();
        Some(u8::from(2 * ones >= self.items.len()))
    }

    /// Merge two neighbor lists whose positions do not overlap.
    pub fn merged(&self, other: &NearestK) -> NearestK {
        let mut all: Vec<Neighbor> = self.items.iter().chain(&other.items).copied().collect();
        all.sort_by(|a, b| a.dist.total_cmp(&b.dist).then(a.pos.cmp(&b.pos)));
        all.truncate(self.k);
        NearestK {
            k: self.k,
            items: all,
        }
    }
}

/// k nearest neighbors of `x` among `memory`, with positions offset by
/// `offset`.
pub(crate) fn knn(memory: &Memory, x: &[f64], k: usize, w2: Option<&[f64]>, offset: usize) -> NearestK {
    let mut best = NearestK::new(k);
    for (i, (p, y)) in memory.iter().enumerate() {
        best.offer(Neighbor {
            dist: sq_dist(x, p, w2),
            pos: offset + i,
            label: y,
        });
    }
    best
}
