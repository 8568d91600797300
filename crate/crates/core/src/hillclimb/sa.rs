//! Simulated annealing with geometric cooling.
//!
//! Temperature `T_k = γ^k` on an objective scale normalised by the first
//! finite value, with `γ` chosen so that `T` reaches `1e-3` at the end of the
//! evaluation budget. Proposals are Gaussian with per-coordinate standard
//! deviation `0.1·(hi − lo)·√T_k`, reflected back into the box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{start_point, BoxDomain, Budget, Evaluator, Halt, OptError, OptResult, SolveOptions};

const FINAL_TEMPERATURE: f64 = 1e-3;
const STEP_FRACTION: f64 = 0.1;

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    let mut t = (v - lo).rem_euclid(2.0 * w);
    if t > w {
        t = 2.0 * w - t;
    }
    lo + t
}

pub fn minimize_sa<F: FnMut(&[f64]) -> f64>(
    f: F,
    dom: &BoxDomain,
    budget: Budget,
    seed: u64,
    opts: &SolveOptions,
) -> Result<OptResult, OptError> {
    let mut ev = Evaluator::new(f, dom, budget, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let _ = anneal(&mut ev, dom, &mut rng, opts);
    Ok(ev.finish())
}

fn anneal<F: FnMut(&[f64]) -> f64>(
    ev: &mut Evaluator<'_, F>,
    dom: &BoxDomain,
    rng: &mut ChaCha8Rng,
    opts: &SolveOptions,
) -> Result<(), Halt> {
    let steps = ev.budget.max_evals.saturating_sub(1).max(1) as f64;
    let gamma = FINAL_TEMPERATURE.powf(1.0 / steps);

    let mut x = start_point(dom, opts, || dom.sample_uniform(rng));
    let mut fx = ev.eval(&x)?;
    let mut scale = if fx.is_finite() && fx != 0.0 { fx.abs() } else { 1.0 };
    let mut scale_fixed = fx.is_finite() && fx != 0.0;
    let mut temperature = 1.0;
    loop {
        temperature *= gamma;
        let spread = STEP_FRACTION * temperature.sqrt();
        let y: Vec<f64> = (0..dom.dim())
            .map(|j| {
                let z: f64 = rng.sample(StandardNormal);
                reflect(x[j] + spread * dom.width(j) * z, dom.lo()[j], dom.hi()[j])
            })
            .collect();
        let fy = ev.eval(&y)?;
        if !scale_fixed && fy.is_finite() && fy != 0.0 {
            scale = fy.abs();
            scale_fixed = true;
        }
        let accept = if fy.is_infinite() && fy > 0.0 {
            false
        } else if fy <= fx {
            true
        } else {
            let p = (-(fy - fx) / (scale * temperature)).exp();
            rng.random::<f64>() < p
        };
        if accept {
            x = y;
            fx = fy;
        }
    }
}
