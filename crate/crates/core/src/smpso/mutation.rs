use rand::Rng;

/// Polynomial mutation: each variable mutates with probability
/// `probability`, perturbed with distribution index `eta` and kept within
/// `[lower, upper]`.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    x: &mut [f64],
    bounds: &[(f64, f64)],
    probability: f64,
    eta: f64,
    rng: &mut R,
) {
    let mut_pow = 1.0 / (eta + 1.0);
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        if rng.random::<f64>() > probability {
            continue;
        }
        if lo == hi {
            *v = lo;
            continue;
        }
        let y = *v;
        let span = hi - lo;
        let delta1 = (y - lo) / span;
        let delta2 = (hi - y) / span;
        let rnd: f64 = rng.random();
        let deltaq = if rnd <= 0.5 {
            let xy = 1.0 - delta1;
            let val = 2.0 * rnd + (1.0 - 2.0 * rnd) * xy.powf(eta + 1.0);
            val.powf(mut_pow) - 1.0
        } else {
            let xy = 1.0 - delta2;
            let val = 2.0 * (1.0 - rnd) + 2.0 * (rnd - 0.5) * xy.powf(eta + 1.0);
            1.0 - val.powf(mut_pow)
        };
        *v = (y + deltaq * span).clamp(lo, hi);
    }
}
