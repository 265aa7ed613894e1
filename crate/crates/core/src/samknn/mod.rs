//! Self-adjusting-memory k-NN with per-feature distance weights.
//!
//! The bank keeps a short-term memory (the recent concept, FIFO) and a
//! long-term memory (older knowledge kept consistent with the STM by
//! cleaning, compressed with class-wise k-means when full). Prediction
//! picks among the STM, LTM and combined k-NN votes by their decayed
//! past accuracy.

mod kmeans;
mod memory;
mod snapshot;

pub use memory::Memory;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::Chunk;
use memory::{knn, sq_dist, NearestK, Neighbor};

/// Per-feature distance multipliers in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidConfig(
                "feature weights must lie in [0, 1]".into(),
            ));
        }
        Ok(Self(alpha))
    }

    pub fn ones(dim: usize) -> Self {
        Self(vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn squared(&self) -> Vec<f64> {
        self.0.iter().map(|a| a * a).collect()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        WeightVector::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamConfig {
    pub k: usize,
    pub stm_cap: usize,
    pub ltm_cap: usize,
    /// Smallest STM window considered during size adaptation.
    pub min_stm: usize,
    /// Per-instance decay of the sub-classifier accuracy trackers.
    pub decay: f64,
    /// Adapt the STM size after every instance instead of every chunk.
    pub adapt_per_instance: bool,
    /// Seed for LTM compression.
    pub seed: u64,
}

impl Default for SamConfig {
    fn default() -> Self {
        Self {
            k: 5,
            stm_cap: 5000,
            ltm_cap: 5000,
            min_stm: 50,
            decay: 0.995,
            adapt_per_instance: false,
            seed: 0,
        }
    }
}

impl SamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.stm_cap == 0 {
            return Err(Error::InvalidConfig("stm_cap must be positive".into()));
        }
        if self.ltm_cap < 2 {
            return Err(Error::InvalidConfig("ltm_cap must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(Error::InvalidConfig("decay must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// The sub-classifiers whose votes compete at prediction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    Stm,
    Ltm,
    Combined,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tracker {
    pub correct: f64,
    pub total: f64,
}

impl Tracker {
    pub fn accuracy(&self) -> f64 {
        if self.total > 0.0 {
            self.correct / self.total
        } else {
            0.0
        }
    }

    fn record(&mut self, hit: bool, decay: f64) {
        self.correct = decay * self.correct + f64::from(u8::from(hit));
        self.total = decay * self.total + 1.0;
    }
}

/// Candidate labels of the three sub-classifiers for one query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Votes {
    pub stm: u8,
    pub ltm: Option<u8>,
    pub combined: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryBank {
    config: SamConfig,
    dim: usize,
    stm: Memory,
    ltm: Memory,
    stm_tracker: Tracker,
    ltm_tracker: Tracker,
    combined_tracker: Tracker,
    compressions: u64,
}

impl MemoryBank {
    pub fn new(dim: usize, config: SamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            dim,
            stm: Memory::new(dim),
            ltm: Memory::new(dim),
            stm_tracker: Tracker::default(),
            ltm_tracker: Tracker::default(),
            combined_tracker: Tracker::default(),
            compressions: 0,
        })
    }

    pub fn config(&self) -> &SamConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn stm(&self) -> &Memory {
        &self.stm
    }

    pub fn ltm(&self) -> &Memory {
        &self.ltm
    }

    pub fn tracker(&self, which: Predictor) -> Tracker {
        match which {
            Predictor::Stm => self.stm_tracker,
            Predictor::Ltm => self.ltm_tracker,
            Predictor::Combined => self.combined_tracker,
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }

    fn votes_inner(&self, x: &[f64], w2: Option<&[f64]>) -> Votes {
        let k = self.config.k;
        let near_stm = knn(&self.stm, x, k, w2, 0);
        let stm = near_stm.majority().expect("stm is non-empty");
        if self.ltm.is_empty() {
            return Votes {
                stm,
                ltm: None,
                combined: stm,
            };
        }
        let near_ltm = knn(&self.ltm, x, k, w2, self.stm.len());
        let combined = near_stm.merged(&near_ltm).majority().expect("non-empty");
        Votes {
            stm,
            ltm: near_ltm.majority(),
            combined,
        }
    }

    /// Labels proposed by the three sub-classifiers under weights `alpha`
    /// (unit weights when `None`).
    pub fn votes(&self, x: &[f64], alpha: Option<&WeightVector>) -> Result<Votes> {
        self.check_dim(x.len())?;
        if self.stm.is_empty() {
            return Err(Error::Empty("short-term memory"));
        }
        let w2 = alpha.map(|a| a.squared());
        Ok(self.votes_inner(x, w2.as_deref()))
    }

    /// The sub-classifier currently trusted most. Ties prefer STM, then
    /// the combined memory, then LTM.
    pub fn selected(&self) -> Predictor {
        if self.ltm.is_empty() {
            return Predictor::Stm;
        }
        let mut best = (Predictor::Stm, self.stm_tracker.accuracy());
        for (p, t) in [
            (Predictor::Combined, self.combined_tracker),
            (Predictor::Ltm, self.ltm_tracker),
        ] {
            if t.accuracy() > best.1 {
                best = (p, t.accuracy());
            }
        }
        best.0
    }

    fn choose(&self, votes: Votes) -> u8 {
        match self.selected() {
            Predictor::Stm => votes.stm,
            Predictor::Combined => votes.combined,
            Predictor::Ltm => votes.ltm.unwrap_or(votes.stm),
        }
    }

    /// Predict one point under feature weights `alpha`.
    pub fn predict(&self, x: &[f64], alpha: &WeightVector) -> Result<u8> {
        self.check_dim(alpha.dim())?;
        Ok(self.choose(self.votes(x, Some(alpha))?))
    }

    /// Predict one point with plain Euclidean distances.
    pub fn predict_unweighted(&self, x: &[f64]) -> Result<u8> {
        Ok(self.choose(self.votes(x, None)?))
    }

    /// Predict every instance of a chunk; `None` means unit weights.
    pub fn predict_chunk(&self, chunk: &Chunk, alpha: Option<&WeightVector>) -> Result<Vec<u8>> {
        if let Some(a) = alpha {
            self.check_dim(a.dim())?;
        }
        self.check_dim(chunk.dim())?;
        if self.stm.is_empty() {
            return Err(Error::Empty("short-term memory"));
        }
        let w2 = alpha.map(|a| a.squared());
        let selected = self.selected();
        Ok(chunk
            .instances
            .par_iter()
            .map(|inst| {
                let votes = self.votes_inner(&inst.features, w2.as_deref());
                match selected {
                    Predictor::Stm => votes.stm,
                    Predictor::Combined => votes.combined,
                    Predictor::Ltm => votes.ltm.unwrap_or(votes.stm),
                }
            })
            .collect())
    }

    /// Learn a labeled chunk, instance by instance, then adapt the STM
    /// size, move discarded points into the LTM through cleaning and
    /// compress the LTM if it is over budget.
    pub fn fit_chunk(&mut self, chunk: &Chunk) -> Result<()> {
        self.check_dim(chunk.dim())?;
        let mut discarded = Memory::new(self.dim);
        for inst in &chunk.instances {
            let (x, y) = (inst.features.as_slice(), inst.label);
            if !self.stm.is_empty() {
                let votes = self.votes_inner(x, None);
                let decay = self.config.decay;
                self.stm_tracker.record(votes.stm == y, decay);
                self.combined_tracker.record(votes.combined == y, decay);
                if let Some(l) = votes.ltm {
                    self.ltm_tracker.record(l == y, decay);
                }
                self.clean_ltm_against(x, y);
            }
            self.stm.push(x, y);
            if self.stm.len() > self.config.stm_cap {
                let evicted = self.stm.drain_front(self.stm.len() - self.config.stm_cap);
                discarded.append(&evicted);
            }
            if self.config.adapt_per_instance {
                discarded.append(&self.adapt_stm_size());
            }
        }
        if !self.config.adapt_per_instance {
            discarded.append(&self.adapt_stm_size());
        }
        if !discarded.is_empty() {
            let kept = clean(&discarded, &self.stm, self.config.k);
            self.ltm.append(&kept);
        }
        self.compress_ltm();
        Ok(())
    }

    /// Remove LTM points that contradict a new labeled point within its
    /// k-th same-label STM neighbor radius.
    fn clean_ltm_against(&mut self, x: &[f64], y: u8) {
        if self.ltm.is_empty() {
            return;
        }
        let Some(radius) = same_label_radius(&self.stm, x, y, self.config.k, None) else {
            return;
        };
        let keep: Vec<bool> = self
            .ltm
            .iter()
            .map(|(p, l)| l == y || sq_dist(x, p, None) > radius)
            .collect();
        self.ltm.retain_mask(&keep);
    }

    /// Shrink the STM to the suffix with the lowest interleaved
    /// test-then-train error. Returns the dropped prefix (uncleaned).
    pub fn adapt_stm_size(&mut self) -> Memory {
        let sizes = candidate_sizes(self.stm.len(), self.config.min_stm);
        if sizes.len() < 2 {
            return Memory::new(self.dim);
        }
        let errors: Vec<f64> = sizes
            .par_iter()
            .map(|&s| interleaved_error(&self.stm.suffix(s), self.config.k))
            .collect();
        let mut best = 0;
        for (i, e) in errors.iter().enumerate() {
            if *e < errors[best] {
                best = i;
            }
        }
        let drop = self.stm.len() - sizes[best];
        self.stm.drain_front(drop)
    }

    /// Replace each class's LTM points with half as many k-means
    /// centroids until the LTM fits its budget.
    pub fn compress_ltm(&mut self) {
        while self.ltm.len() > self.config.ltm_cap {
            let dim = self.dim;
            let mut next = Memory::new(dim);
            for label in [0u8, 1u8] {
                let points: Vec<f64> = self
                    .ltm
                    .iter()
                    .filter(|(_, l)| *l == label)
                    .flat_map(|(p, _)| p.iter().copied())
                    .collect();
                let count = points.len() / dim.max(1);
                if count == 0 {
                    continue;
                }
                let seed = self
                    .config
                    .seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add(self.compressions * 2 + u64::from(label));
                let centroids = kmeans::kmeans(&points, dim, count.div_ceil(2), seed);
                for c in centroids.chunks(dim) {
                    next.push(c, label);
                }
            }
            self.compressions += 1;
            self.ltm = next;
        }
    }

    #[cfg(test)]
    pub(crate) fn parts_mut(&mut self) -> (&mut Memory, &mut Memory) {
        (&mut self.stm, &mut self.ltm)
    }
}

/// Weighted Euclidean distance sqrt(sum alpha_i^2 (a_i - b_i)^2).
pub fn distance(a: &[f64], b: &[f64], alpha: &WeightVector) -> f64 {
    sq_dist(a, b, Some(&alpha.squared())).sqrt()
}

/// Window sizes tried during STM adaptation: the full size, then
/// successive ceiling halvings that stay at or above `min_size`.
pub fn candidate_sizes(len: usize, min_size: usize) -> Vec<usize> {
    let mut sizes = vec![len];
    let mut s = len;
    while s > 1 {
        s = s.div_ceil(2);
        if s < min_size {
            break;
        }
        sizes.push(s);
    }
    sizes
}

/// Test-then-train error of unweighted k-NN over a window: each point from
/// position k on is predicted from the points before it.
pub fn interleaved_error(window: &Memory, k: usize) -> f64 {
    let n = window.len();
    if n <= k {
        return 0.0;
    }
    let mistakes: usize = (k..n)
        .into_par_iter()
        .map(|j| {
            let x = window.point(j);
            let mut near = NearestK::new(k);
            for i in 0..j {
                near.offer(Neighbor {
                    dist: sq_dist(x, window.point(i), None),
                    pos: i,
                    label: window.label(i),
                });
            }
            usize::from(near.majority() != Some(window.label(j)))
        })
        .sum();
    mistakes as f64 / (n - k) as f64
}

/// Squared distance from `x` to its k-th nearest neighbor with label `y`
/// in `reference`, skipping position `exclude`. Falls back to the farthest
/// same-label point when fewer than k exist; `None` when there are none.
fn same_label_radius(reference: &Memory, x: &[f64], y: u8, k: usize, exclude: Option<usize>) -> Option<f64> {
    let mut near = NearestK::new(k);
    for (i, (p, l)) in reference.iter().enumerate() {
        if l != y || Some(i) == exclude {
            continue;
        }
        near.offer(Neighbor {
            dist: sq_dist(x, p, None),
            pos: i,
            label: l,
        });
    }
    near.worst().map(|n| n.dist)
}

/// Remove from `target` every point lying within the same-label k-NN
/// radius of some reference point while carrying a different label.
pub fn clean(target: &Memory, reference: &Memory, k: usize) -> Memory {
    let radii: Vec<Option<f64>> = (0..reference.len())
        .into_par_iter()
        .map(|i| same_label_radius(reference, reference.point(i), reference.label(i), k, Some(i)))
        .collect();
    let keep: Vec<bool> = (0..target.len())
        .into_par_iter()
        .map(|t| {
            let (p, l) = (target.point(t), target.label(t));
            !reference.iter().zip(&radii).any(|((x, y), r)| match r {
                Some(r) => y != l && sq_dist(x, p, None) <= *r,
                None => false,
            })
        })
        .collect();
    let mut out = target.clone();
    out.retain_mask(&keep);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{Group, Instance};

    fn bank_with(points: &[([f64; 2], u8)], k: usize) -> MemoryBank {
        let mut bank = MemoryBank::new(2, SamConfig { k, ..SamConfig::default() }).unwrap();
        let (stm, _) = bank.parts_mut();
        for (x, y) in points {
            stm.push(x, *y);
        }
        bank
    }

    #[test]
    fn nearest_neighbor_by_hand() {
        let bank = bank_with(&[([0.0, 0.0], 0), ([1.0, 1.0], 1)], 1);
        let ones = WeightVector::ones(2);
        assert_eq!(bank.predict(&[0.1, 0.1], &ones).unwrap(), 0);
    }

    #[test]
    fn masked_feature_changes_the_neighbor() {
        let bank = bank_with(&[([0.0, 0.0], 0), ([1.0, 1.0], 1)], 1);
        let alpha = WeightVector::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(bank.predict(&[0.1, 0.9], &alpha).unwrap(), 1);
    }

    #[test]
    fn empty_stm_and_bad_dims_are_errors() {
        let bank = MemoryBank::new(2, SamConfig::default()).unwrap();
        assert!(matches!(
            bank.predict_unweighted(&[0.0, 0.0]),
            Err(Error::Empty(_))
        ));
        let bank = bank_with(&[([0.0, 0.0], 0)], 1);
        assert!(bank.predict_unweighted(&[0.0]).is_err());
        assert!(bank.predict(&[0.0, 0.0], &WeightVector::ones(3)).is_err());
    }

    #[test]
    fn weight_vector_bounds() {
        assert!(WeightVector::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(WeightVector::new(vec![1.5]).is_err());
        assert!(WeightVector::new(vec![-0.1]).is_err());
        assert!(serde_json::from_str::<WeightVector>("[2.0]").is_err());
    }

    #[test]
    fn candidate_sizes_respect_minimum() {
        assert_eq!(candidate_sizes(60, 50), vec![60]);
        assert_eq!(candidate_sizes(40, 50), vec![40]);
        assert_eq!(candidate_sizes(400, 50), vec![400, 200, 100, 50]);
        assert_eq!(candidate_sizes(401, 50), vec![401, 201, 101, 51]);
    }

    #[test]
    fn cleaning_removes_contradicting_duplicate() {
        let reference = Memory::from_points(
            1,
            [(&[0.0][..], 1u8), (&[0.1][..], 1), (&[0.2][..], 1)],
        )
        .unwrap();
        let target = Memory::from_points(1, [(&[0.0][..], 0u8), (&[5.0][..], 0)]).unwrap();
        let cleaned = clean(&target, &reference, 1);
        assert_eq!(cleaned.len(), 1);
        assert_eq!(cleaned.point(0), &[5.0]);
    }

    #[test]
    fn cleaning_keeps_agreeing_labels() {
        let reference = Memory::from_points(1, [(&[0.0][..], 1u8), (&[0.5][..], 1)]).unwrap();
        let target = Memory::from_points(1, [(&[0.0][..], 1u8), (&[0.2][..], 1)]).unwrap();
        assert_eq!(clean(&target, &reference, 3), target);
    }

    fn chunk_of(points: &[(f64, u8)]) -> Chunk {
        let instances = points
            .iter()
            .map(|&(x, y)| Instance::new(vec![x, 1.0 - x], Group::Protected, y).unwrap())
            .collect();
        Chunk::new(1, instances).unwrap()
    }

    #[test]
    fn first_chunk_lands_in_stm() {
        let mut bank = MemoryBank::new(2, SamConfig::default()).unwrap();
        let pts: Vec<(f64, u8)> = (0..30).map(|i| (i as f64 / 30.0, u8::from(i >= 15))).collect();
        bank.fit_chunk(&chunk_of(&pts)).unwrap();
        assert_eq!(bank.stm().len(), 30);
        assert_eq!(bank.ltm().len(), 0);
    }

    #[test]
    fn compress_noop_at_cap() {
        let mut bank = MemoryBank::new(1, SamConfig { ltm_cap: 4, ..SamConfig::default() }).unwrap();
        let (_, ltm) = bank.parts_mut();
        for i in 0..4 {
            ltm.push(&[i as f64], 0);
        }
        let before = bank.clone();
        bank.compress_ltm();
        assert_eq!(bank, before);
    }

    #[test]
    fn compress_halves_single_class() {
        let mut bank = MemoryBank::new(1, SamConfig { ltm_cap: 10, ..SamConfig::default() }).unwrap();
        let (_, ltm) = bank.parts_mut();
        for i in 0..20 {
            ltm.push(&[i as f64], 1);
        }
        bank.compress_ltm();
        assert_eq!(bank.ltm().len(), 10);
        assert!(bank.ltm().labels().iter().all(|&l| l == 1));
    }

    #[test]
    fn compress_duplicates_keep_coordinates() {
        let mut bank = MemoryBank::new(2, SamConfig { ltm_cap: 3, ..SamConfig::default() }).unwrap();
        let (_, ltm) = bank.parts_mut();
        for _ in 0..8 {
            ltm.push(&[0.25, 0.75], 0);
        }
        bank.compress_ltm();
        assert!(bank.ltm().len() <= 3);
        for (p, l) in bank.ltm().iter() {
            assert_eq!(p, &[0.25, 0.75]);
            assert_eq!(l, 0);
        }
    }

    #[test]
    fn stationary_separable_stm_keeps_full_window() {
        let mut bank = MemoryBank::new(2, SamConfig { k: 3, ..SamConfig::default() }).unwrap();
        let (stm, _) = bank.parts_mut();
        for i in 0..200 {
            let x = (i % 20) as f64 / 20.0;
            stm.push(&[x, 0.0], u8::from(x >= 0.5));
        }
        let dropped = bank.adapt_stm_size();
        assert!(dropped.is_empty());
        assert_eq!(bank.stm().len(), 200);
    }
}
