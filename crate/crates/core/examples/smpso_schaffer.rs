//! Run the multi-objective swarm on Schaffer's problem, f1 = x^2 and
//! f2 = (x-2)^2 over [-10, 10], whose Pareto set is [0, 2].

use emosam::smpso::{knee_point, run_smpso, BiObjectiveProblem, Objectives};
use emosam::SmpsoParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Schaffer;

impl BiObjectiveProblem for Schaffer {
    fn dim(&self) -> usize {
        1
    }

    fn bounds(&self, _: usize) -> (f64, f64) {
        (-10.0, 10.0)
    }

    fn evaluate(&self, x: &[f64]) -> Objectives {
        [x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0)]
    }
}

fn main() -> emosam::Result<()> {
    let params = SmpsoParams {
        swarm_size: 100,
        iterations: 100,
        ..SmpsoParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let archive = run_smpso(&Schaffer, &[], &params, &mut rng, |it, _, archive| {
        if it % 25 == 0 {
            println!("iteration {it:>3}: archive {}", archive.len());
        }
    })?;

    let mut xs: Vec<f64> = archive.members().iter().map(|s| s.position[0]).collect();
    xs.sort_by(f64::total_cmp);
    let inside = xs.iter().filter(|x| (-0.05..=2.05).contains(*x)).count();
    println!("{} members, x in [{:.4}, {:.4}], {inside} inside [0, 2] +/- 0.05", xs.len(), xs[0], xs[xs.len() - 1]);
    let (knee, dist) = knee_point(&archive.objectives())?;
    println!("knee x = {:.4} (distance {dist:.4})", archive.members()[knee].position[0]);
    Ok(())
}
