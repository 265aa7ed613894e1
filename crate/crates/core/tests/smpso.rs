use emosam::smpso::{
    constriction_coefficient, crowding_distance, dominates, evaluate, knee_point, optimize, polynomial_mutation,
    run_smpso, Archive, BiObjectiveProblem, Objectives, Solution,
};
use emosam::{Chunk, Group, Instance, MemoryBank, SamConfig, SmpsoParams, WeightVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Schaffer;

impl BiObjectiveProblem for Schaffer {
    fn dim(&self) -> usize {
        1
    }
    fn bounds(&self, _: usize) -> (f64, f64) {
        (-5.0, 5.0)
    }
    fn evaluate(&self, x: &[f64]) -> Objectives {
        [x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0)]
    }
}

/// Three-variable problem on the unit cube with a curved front.
struct Bowl;

impl BiObjectiveProblem for Bowl {
    fn dim(&self) -> usize {
        3
    }
    fn bounds(&self, _: usize) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn evaluate(&self, x: &[f64]) -> Objectives {
        let g = 1.0 + x[1] * x[1] + x[2] * x[2];
        [x[0] * g, (1.0 - x[0].sqrt()) * g]
    }
}

fn assert_non_dominated(members: &[Solution]) {
    for (i, a) in members.iter().enumerate() {
        for (j, b) in members.iter().enumerate() {
            assert!(i == j || !dominates(&a.objectives, &b.objectives));
        }
    }
}

#[test]
fn table_coefficients_need_no_constriction() {
    assert_eq!(constriction_coefficient(1.49445, 1.49445), 1.0);
    let chi = constriction_coefficient(2.5, 2.5);
    let phi: f64 = 5.0;
    assert!((chi - 2.0 / (2.0 - phi - (phi * phi - 4.0 * phi).sqrt())).abs() < 1e-12);
}

#[test]
fn crowding_examples() {
    assert!(crowding_distance(&[[0.0, 1.0], [1.0, 0.0]]).iter().all(|d| d.is_infinite()));
    let d = crowding_distance(&[[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]);
    assert_eq!(d[1], 2.0);
    let d = crowding_distance(&[[0.3, 0.3], [0.3, 0.3], [0.3, 0.3]]);
    assert!(d.iter().all(|v| !v.is_nan()));
}

#[test]
fn knee_examples() {
    let (i, dist) = knee_point(&[[0.0, 1.0], [0.2, 0.2], [1.0, 0.0]]).unwrap();
    assert_eq!(i, 1);
    assert!((dist - 0.6 / 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(knee_point(&[[0.4, 0.1]]).unwrap().0, 0);
    assert_eq!(knee_point(&[[0.5, 0.2], [0.1, 0.3]]).unwrap().0, 0);
    assert_eq!(knee_point(&[[0.0, 1.0], [0.5, 0.5], [1.0, 0.0], [0.25, 0.75]]).unwrap().0, 0);
    assert!(knee_point(&[]).is_err());
}

#[test]
fn schaffer_front_is_found() {
    let params = SmpsoParams::default();
    for seed in 0..10 {
        let archive = run_smpso(&Schaffer, &[], &params, &mut ChaCha8Rng::seed_from_u64(seed), |_, _, _| {}).unwrap();
        let inside = archive.members().iter().filter(|s| (-0.05..=2.05).contains(&s.position[0])).count();
        assert!(inside as f64 >= 0.95 * archive.len() as f64, "seed {seed}: {inside}/{}", archive.len());
        assert_non_dominated(archive.members());
    }
}

#[test]
fn swarm_stays_in_bounds_every_iteration() {
    let params = SmpsoParams {
        iterations: 30,
        ..SmpsoParams::default()
    };
    let mut iterations = 0;
    run_smpso(&Bowl, &[vec![2.0, -1.0, 0.5]], &params, &mut ChaCha8Rng::seed_from_u64(5), |_, swarm, archive| {
        iterations += 1;
        for p in swarm {
            assert!(p.position.iter().all(|x| (0.0..=1.0).contains(x)));
            assert!(p.velocity.iter().all(|v| v.abs() <= 0.5));
        }
        assert!(archive.len() <= params.archive_capacity);
        assert_non_dominated(archive.members());
    })
    .unwrap();
    assert_eq!(iterations, 30);
}

#[test]
fn fixed_seed_gives_identical_archives() {
    let params = SmpsoParams::default();
    let run = |seed| run_smpso(&Bowl, &[], &params, &mut ChaCha8Rng::seed_from_u64(seed), |_, _, _| {}).unwrap();
    assert_eq!(run(3).members(), run(3).members());
}

#[test]
fn mutation_stays_in_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let bounds = [(0.0, 1.0), (-5.0, 5.0), (2.0, 2.0)];
    for _ in 0..100_000 {
        let mut x: Vec<f64> = bounds.iter().map(|&(lo, hi)| lo + rng.random::<f64>() * (hi - lo)).collect();
        polynomial_mutation(&mut x, &bounds, 1.0, 20.0, &mut rng);
        for (v, (lo, hi)) in x.iter().zip(bounds) {
            assert!(*v >= lo && *v <= hi);
        }
    }
}

fn labeled_chunk(seed: u64, n: usize, dim: usize) -> Chunk {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instances = (0..n)
        .map(|i| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
            let group = if i % 3 == 0 { Group::Protected } else { Group::Unprotected };
            let y = u8::from(x[0] > 0.5);
            Instance::new(x, group, y).unwrap()
        })
        .collect();
    Chunk::new(0, instances).unwrap()
}

fn bank_on(chunk: &Chunk) -> MemoryBank {
    let mut bank = MemoryBank::new(chunk.dim(), SamConfig::default()).unwrap();
    bank.fit_chunk(chunk).unwrap();
    bank
}

#[test]
fn evaluate_composes_the_metrics() {
    let bank = bank_on(&labeled_chunk(1, 120, 4));
    let chunk = labeled_chunk(2, 50, 4);
    let ones = WeightVector::ones(4);
    let preds: Vec<u8> = chunk.instances.iter().map(|i| bank.predict(&i.features, &ones).unwrap()).collect();
    let acc = emosam::metrics::accuracy(&preds, &chunk.labels()).unwrap();
    let disc = emosam::metrics::discrimination(&preds, &chunk.groups()).unwrap();
    let e = evaluate(&ones, &chunk, &bank).unwrap();
    assert_eq!((e.objectives.err, e.objectives.disc), (1.0 - acc, disc.value.abs()));

    // Relabel with the bank's own predictions: zero error.
    let relabeled = Chunk::new(
        0,
        chunk
            .instances
            .iter()
            .zip(&preds)
            .map(|(i, &p)| Instance::new(i.features.clone(), Group::Unprotected, p).unwrap())
            .collect(),
    )
    .unwrap();
    let e = evaluate(&ones, &relabeled, &bank).unwrap();
    assert_eq!(e.objectives.err, 0.0);
    assert!(e.degenerate && e.objectives.disc == 0.0);
}

#[test]
fn evaluate_and_optimize_leave_the_bank_alone() {
    let bank = bank_on(&labeled_chunk(3, 150, 3));
    let before = bank.to_bytes();
    let chunk = labeled_chunk(4, 60, 3);
    evaluate(&WeightVector::new(vec![0.2, 0.9, 0.4]).unwrap(), &chunk, &bank).unwrap();
    let params = SmpsoParams {
        swarm_size: 8,
        iterations: 3,
        ..SmpsoParams::default()
    };
    let archive = optimize(&chunk, &bank, &[WeightVector::ones(3)], &params, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(bank.to_bytes(), before);
    assert_non_dominated(archive.members());
    for s in archive.to_pareto() {
        assert!(s.alpha.as_slice().iter().all(|a| (0.0..=1.0).contains(a)));
        assert!((0.0..=1.0).contains(&s.objectives.err) && (0.0..=1.0).contains(&s.objectives.disc));
    }
}

#[test]
fn optimize_needs_a_populated_bank() {
    let bank = MemoryBank::new(3, SamConfig::default()).unwrap();
    let err = optimize(&labeled_chunk(0, 20, 3), &bank, &[], &SmpsoParams::default(), &mut ChaCha8Rng::seed_from_u64(0));
    assert_eq!(err.unwrap_err().kind(), "empty");
}

proptest! {
    #[test]
    fn archive_stays_non_dominated(points in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..300), cap in 2usize..40) {
        let mut archive = Archive::new(cap);
        for (i, (a, b)) in points.into_iter().enumerate() {
            // Coarse grid to provoke duplicates and ties.
            let obj = [(a * 20.0).round() / 20.0, (b * 20.0).round() / 20.0];
            archive.insert(Solution { position: vec![i as f64], objectives: obj });
            prop_assert!(archive.len() <= cap);
            let members = archive.members();
            for x in members {
                for y in members {
                    prop_assert!(!dominates(&x.objectives, &y.objectives));
                }
            }
            let objs = archive.objectives();
            for (i, o) in objs.iter().enumerate() {
                prop_assert!(!objs[..i].contains(o));
            }
        }
    }

    #[test]
    fn dominance_is_irreflexive_and_antisymmetric(a in (0.0f64..1.0, 0.0f64..1.0), b in (0.0f64..1.0, 0.0f64..1.0)) {
        let (a, b) = ([a.0, a.1], [b.0, b.1]);
        prop_assert!(!dominates(&a, &a));
        prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
    }
}
