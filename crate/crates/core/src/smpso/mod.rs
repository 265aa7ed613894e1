//! Speed-constrained multi-objective particle swarm optimization over
//! feature-weight space.

mod archive;
mod mutation;

pub use archive::{crowding_distance, dominates, knee_point, Archive, Objectives, Solution};
pub use mutation::polynomial_mutation;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics;
use crate::samknn::{MemoryBank, WeightVector};
use crate::stream::Chunk;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmpsoParams {
    pub swarm_size: usize,
    pub iterations: usize,
    pub c1: f64,
    pub c2: f64,
    pub inertia: f64,
    pub archive_capacity: usize,
    /// Probability that a particle is mutated in an iteration.
    pub mutation_rate: f64,
    pub distribution_index: f64,
    /// Velocity factor applied when a position is clamped to a bound.
    pub velocity_reversal: f64,
}

impl Default for SmpsoParams {
    fn default() -> Self {
        Self {
            swarm_size: 30,
            iterations: 10,
            c1: 1.49445,
            c2: 1.49445,
            inertia: 0.1,
            archive_capacity: 100,
            mutation_rate: 0.15,
            distribution_index: 20.0,
            velocity_reversal: -0.001,
        }
    }
}

impl SmpsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size == 0 || self.archive_capacity == 0 {
            return Err(Error::InvalidConfig(
                "swarm size and archive capacity must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::InvalidConfig("mutation_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn constriction(&self) -> f64 {
        constriction_coefficient(self.c1, self.c2)
    }
}

/// Clerc-Kennedy constriction: 1 when `c1 + c2 <= 4`.
pub fn constriction_coefficient(c1: f64, c2: f64) -> f64 {
    let phi = c1 + c2;
    if phi > 4.0 {
        2.0 / (2.0 - phi - (phi * phi - 4.0 * phi).sqrt())
    } else {
        1.0
    }
}

/// A box-constrained problem with two minimized objectives.
pub trait BiObjectiveProblem: Sync {
    fn dim(&self) -> usize;
    fn bounds(&self, var: usize) -> (f64, f64);
    fn evaluate(&self, x: &[f64]) -> Objectives;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub objectives: Objectives,
    pub best_position: Vec<f64>,
    pub best_objectives: Objectives,
}

fn evaluate_all<P: BiObjectiveProblem>(problem: &P, positions: &[Vec<f64>]) -> Vec<Objectives> {
    positions.par_iter().map(|x| problem.evaluate(x)).collect()
}

fn tournament<R: Rng + ?Sized>(archive: &Archive, crowding: &[f64], rng: &mut R) -> usize {
    let n = archive.len();
    if n == 1 {
        return 0;
    }
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    if crowding[a] > crowding[b] {
        a
    } else if crowding[b] > crowding[a] {
        b
    } else if rng.random_bool(0.5) {
        a
    } else {
        b
    }
}

/// Run SMPSO and return its leader archive.
///
/// The swarm starts from `warm_start` (clamped into bounds, at most
/// `swarm_size` of them) padded with uniform random positions, all with
/// zero velocity. `observe` is called after every iteration with the
/// iteration number, swarm and archive.
pub fn run_smpso<P, R, F>(
    problem: &P,
    warm_start: &[Vec<f64>],
    params: &SmpsoParams,
    rng: &mut R,
    mut observe: F,
) -> Result<Archive>
where
    P: BiObjectiveProblem,
    R: Rng + ?Sized,
    F: FnMut(usize, &[Particle], &Archive),
{
    params.validate()?;
    let dim = problem.dim();
    let bounds: Vec<(f64, f64)> = (0..dim).map(|i| problem.bounds(i)).collect();
    let delta: Vec<f64> = bounds.iter().map(|(lo, hi)| (hi - lo) / 2.0).collect();
    for w in warm_start {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.len(),
            });
        }
    }

    let mut positions: Vec<Vec<f64>> = warm_start
        .iter()
        .take(params.swarm_size)
        .map(|w| w.iter().zip(&bounds).map(|(v, (lo, hi))| v.clamp(*lo, *hi)).collect())
        .collect();
    while positions.len() < params.swarm_size {
        positions.push(bounds.iter().map(|&(lo, hi)| lo + rng.random::<f64>() * (hi - lo)).collect());
    }
    let objectives = evaluate_all(problem, &positions);
    let mut swarm: Vec<Particle> = positions
        .into_iter()
        .zip(objectives)
        .map(|(position, objectives)| Particle {
            velocity: vec![0.0; dim],
            best_position: position.clone(),
            best_objectives: objectives,
            position,
            objectives,
        })
        .collect();
    let mut archive = Archive::new(params.archive_capacity);
    for p in &swarm {
        archive.insert(Solution {
            position: p.position.clone(),
            objectives: p.objectives,
        });
    }

    let chi = params.constriction();
    let mutation_probability = 1.0 / dim.max(1) as f64;
    for iteration in 0..params.iterations {
        let crowding = archive.crowding_distances();
        for p in swarm.iter_mut() {
            let leader = &archive.members()[tournament(&archive, &crowding, rng)].position;
            for j in 0..dim {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = chi
                    * (params.inertia * p.velocity[j]
                        + params.c1 * r1 * (p.best_position[j] - p.position[j])
                        + params.c2 * r2 * (leader[j] - p.position[j]));
                p.velocity[j] = v.clamp(-delta[j], delta[j]);
            }
            for (j, &(lo, hi)) in bounds.iter().enumerate().take(dim) {
                let x = p.position[j] + p.velocity[j];
                if x < lo {
                    p.position[j] = lo;
                    p.velocity[j] *= params.velocity_reversal;
                } else if x > hi {
                    p.position[j] = hi;
                    p.velocity[j] *= params.velocity_reversal;
                } else {
                    p.position[j] = x;
                }
            }
            if rng.random::<f64>() < params.mutation_rate {
                polynomial_mutation(
                    &mut p.position,
                    &bounds,
                    mutation_probability,
                    params.distribution_index,
                    rng,
                );
            }
        }

        let positions: Vec<Vec<f64>> = swarm.iter().map(|p| p.position.clone()).collect();
        let objectives = evaluate_all(problem, &positions);
        for (p, obj) in swarm.iter_mut().zip(objectives) {
            p.objectives = obj;
            let replace = if dominates(&obj, &p.best_objectives) {
                true
            } else if dominates(&p.best_objectives, &obj) {
                false
            } else {
                rng.random_bool(0.5)
            };
            if replace {
                p.best_position.clone_from(&p.position);
                p.best_objectives = obj;
            }
            archive.insert(Solution {
                position: p.position.clone(),
                objectives: obj,
            });
        }
        observe(iteration, &swarm, &archive);
    }
    Ok(archive)
}

/// Error and absolute discrimination of a weight vector on a chunk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePair {
    pub err: f64,
    pub disc: f64,
}

impl ObjectivePair {
    pub fn as_array(&self) -> Objectives {
        [self.err, self.disc]
    }
}

impl From<Objectives> for ObjectivePair {
    fn from(o: Objectives) -> Self {
        Self { err: o[0], disc: o[1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub objectives: ObjectivePair,
    /// The chunk lacked one of the groups, so `disc` is 0 by convention.
    pub degenerate: bool,
}

/// A feature-weight vector from the front with its objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoSolution {
    pub alpha: WeightVector,
    pub objectives: ObjectivePair,
}

impl Archive {
    pub fn to_pareto(&self) -> Vec<ParetoSolution> {
        self.members()
            .iter()
            .map(|s| ParetoSolution {
                alpha: WeightVector::new(s.position.clone()).expect("positions stay in [0, 1]"),
                objectives: s.objectives.into(),
            })
            .collect()
    }
}

/// Predict `chunk` against the frozen `bank` under weights `alpha` and
/// score the predictions.
pub fn evaluate(alpha: &WeightVector, chunk: &Chunk, bank: &MemoryBank) -> Result<Evaluation> {
    let predictions = bank.predict_chunk(chunk, Some(alpha))?;
    let acc = metrics::accuracy(&predictions, &chunk.labels())?;
    let disc = metrics::discrimination(&predictions, &chunk.groups())?;
    Ok(Evaluation {
        objectives: ObjectivePair {
            err: 1.0 - acc,
            disc: disc.abs(),
        },
        degenerate: disc.degenerate,
    })
}

/// Feature-weight search problem over `[0, 1]^d` for one labeled chunk.
pub struct FairnessProblem<'a> {
    chunk: &'a Chunk,
    bank: &'a MemoryBank,
}

impl<'a> FairnessProblem<'a> {
    pub fn new(chunk: &'a Chunk, bank: &'a MemoryBank) -> Result<Self> {
        if bank.stm().is_empty() {
            return Err(Error::Empty("short-term memory"));
        }
        if chunk.dim() != bank.dim() {
            return Err(Error::DimensionMismatch {
                expected: bank.dim(),
                got: chunk.dim(),
            });
        }
        Ok(Self { chunk, bank })
    }
}

impl BiObjectiveProblem for FairnessProblem<'_> {
    fn dim(&self) -> usize {
        self.bank.dim()
    }

    fn bounds(&self, _var: usize) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn evaluate(&self, x: &[f64]) -> Objectives {
        let alpha = WeightVector::new(x.to_vec()).expect("particles stay in bounds");
        evaluate(&alpha, self.chunk, self.bank)
            .expect("validated problem")
            .objectives
            .as_array()
    }
}

/// Optimize feature weights on a labeled chunk against a frozen bank.
pub fn optimize<R: Rng + ?Sized>(
    chunk: &Chunk,
    bank: &MemoryBank,
    warm_start: &[WeightVector],
    params: &SmpsoParams,
    rng: &mut R,
) -> Result<Archive> {
    let problem = FairnessProblem::new(chunk, bank)?;
    let warm: Vec<Vec<f64>> = warm_start.iter().map(|w| w.as_slice().to_vec()).collect();
    run_smpso(&problem, &warm, params, rng, |_, _, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_coefficients_need_no_constriction() {
        let p = SmpsoParams::default();
        assert_eq!(p.c1 + p.c2, 2.9889);
        assert_eq!(p.constriction(), 1.0);
    }

    #[test]
    fn constriction_above_four() {
        // phi = 4.1: 2 / (2 - 4.1 - sqrt(16.81 - 16.4)) = 2 / (-2.1 - 0.640312...)
        let chi = constriction_coefficient(2.05, 2.05);
        let expected = 2.0 / (2.0 - 4.1 - (4.1f64 * 4.1 - 16.4).sqrt());
        assert!((chi - expected).abs() < 1e-15);
        assert!(chi < 0.0 && chi > -1.0);
    }

    struct Sphere;

    impl BiObjectiveProblem for Sphere {
        fn dim(&self) -> usize {
            2
        }
        fn bounds(&self, _: usize) -> (f64, f64) {
            (0.0, 1.0)
        }
        fn evaluate(&self, x: &[f64]) -> Objectives {
            [x[0], 1.0 - x[0] + x[1]]
        }
    }

    #[test]
    fn warm_start_is_clamped_and_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = SmpsoParams {
            swarm_size: 4,
            iterations: 0,
            ..SmpsoParams::default()
        };
        let archive = run_smpso(&Sphere, &[vec![2.0, -1.0]], &params, &mut rng, |_, _, _| {}).unwrap();
        assert!(archive.members().iter().any(|s| s.position == vec![1.0, 0.0]));
        assert!(run_smpso(&Sphere, &[vec![0.5]], &params, &mut rng, |_, _, _| {}).is_err());
    }
}
