use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Objective vector, both components minimized.
pub type Objectives = [f64; 2];

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &Objectives, b: &Objectives) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// A position with its objective values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub position: Vec<f64>,
    pub objectives: Objectives,
}

/// Crowding distance of each solution within the set.
///
/// Boundary solutions of each objective get +inf; interior ones sum the
/// normalized gap between their neighbors. Objectives with zero range add
/// nothing.
pub fn crowding_distance(objectives: &[Objectives]) -> Vec<f64> {
    let n = objectives.len();
    let mut distance = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    #[allow(clippy::needless_range_loop)]
    for m in 0..2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| objectives[a][m].total_cmp(&objectives[b][m]).then(a.cmp(&b)));
        let lo = objectives[order[0]][m];
        let hi = objectives[order[n - 1]][m];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            let gap = objectives[w[2]][m] - objectives[w[0]][m];
            distance[w[1]] += gap / range;
        }
    }
    distance
}

/// Bounded set of mutually non-dominated solutions, pruned by crowding
/// distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    capacity: usize,
    members: Vec<Solution>,
}

impl Archive {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "archive capacity must be positive");
        Self {
            capacity,
            members: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Solution] {
        &self.members
    }

    pub fn objectives(&self) -> Vec<Objectives> {
        self.members.iter().map(|s| s.objectives).collect()
    }

    pub fn crowding_distances(&self) -> Vec<f64> {
        crowding_distance(&self.objectives())
    }

    /// Offer a solution. Returns whether it was accepted; it is rejected
    /// when dominated by, or objective-equal to, a current member.
    pub fn insert(&mut self, candidate: Solution) -> bool {
        let c = candidate.objectives;
        if self
            .members
            .iter()
            .any(|m| m.objectives == c || dominates(&m.objectives, &c))
        {
            return false;
        }
        self.members.retain(|m| !dominates(&c, &m.objectives));
        self.members.push(candidate);
        if self.members.len() > self.capacity {
            let crowding = self.crowding_distances();
            let mut worst = 0;
            for (i, d) in crowding.iter().enumerate() {
                if *d < crowding[worst] {
                    worst = i;
                }
            }
            self.members.remove(worst);
        }
        true
    }

    pub fn into_members(self) -> Vec<Solution> {
        self.members
    }
}

/// Index of the knee of a front and its distance to the line joining the
/// extreme solutions.
///
/// With fewer than three members (or coincident extremes) the member with
/// the lexicographically smallest (objective 1, objective 0) is returned
/// with distance 0. Ties go to the lowest index.
pub fn knee_point(objectives: &[Objectives]) -> Result<(usize, f64)> {
    if objectives.is_empty() {
        return Err(Error::Empty("archive"));
    }
    let lexicographic = |key: fn(&Objectives) -> (f64, f64)| {
        let mut best = 0;
        for (i, o) in objectives.iter().enumerate() {
            let (a, b) = key(o);
            let (ba, bb) = key(&objectives[best]);
            if a < ba || (a == ba && b < bb) {
                best = i;
            }
        }
        best
    };
    let best_second = lexicographic(|o| (o[1], o[0]));
    if objectives.len() < 3 {
        return Ok((best_second, 0.0));
    }
    let best_first = lexicographic(|o| (o[0], o[1]));
    let a = objectives[best_first];
    let b = objectives[best_second];
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let norm = (dx * dx + dy * dy).sqrt();
    if norm == 0.0 {
        return Ok((best_second, 0.0));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, o) in objectives.iter().enumerate() {
        let d = (dx * (a[1] - o[1]) - dy * (a[0] - o[0])).abs() / norm;
        if d > best.1 {
            best = (i, d);
        }
    }
    Ok(best)
}
