//! Globalised Nelder–Mead: repeated simplex searches whose starting points
//! follow a randomly shifted Halton sequence over the box.
//!
//! A single search ends when the simplex diameter drops below `1e-6` of the
//! box diagonal, when its values have been exactly flat for `n + 1`
//! iterations, or when it has used its share of the budget
//! (`max(max_evals / 4, 50·(n + 1))` evaluations).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{start_point, BoxDomain, Budget, Evaluator, Halt, OptError, OptResult, SolveOptions};

const PRIMES: [u32; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131,
];

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= b;
        r += f * (index % base as u64) as f64;
        index /= base as u64;
    }
    r
}

fn nth_prime(j: usize) -> u32 {
    if j < PRIMES.len() {
        return PRIMES[j];
    }
    let mut count = PRIMES.len();
    let mut candidate = PRIMES[PRIMES.len() - 1] + 2;
    loop {
        if (2..).take_while(|d| d * d <= candidate).all(|d| candidate % d != 0) {
            if count == j {
                return candidate;
            }
            count += 1;
        }
        candidate += 2;
    }
}

struct HaltonStarts {
    index: u64,
    shift: Vec<f64>,
}

impl HaltonStarts {
    fn new(dim: usize, rng: &mut impl Rng) -> Self {
        Self { index: 1, shift: (0..dim).map(|_| rng.random::<f64>()).collect() }
    }

    fn next(&mut self, dom: &BoxDomain) -> Vec<f64> {
        let z: Vec<f64> =
            self.shift.iter().enumerate().map(|(j, s)| (halton(self.index, nth_prime(j)) + s).fract()).collect();
        self.index += 1;
        dom.from_unit(&z)
    }
}

pub fn minimize_nm<F: FnMut(&[f64]) -> f64>(
    f: F,
    dom: &BoxDomain,
    budget: Budget,
    seed: u64,
    opts: &SolveOptions,
) -> Result<OptResult, OptError> {
    run(f, dom, budget, seed, opts, true)
}

/// One Nelder–Mead search without restarts; may return before the budget.
pub fn minimize_nm_single<F: FnMut(&[f64]) -> f64>(
    f: F,
    dom: &BoxDomain,
    budget: Budget,
    seed: u64,
    opts: &SolveOptions,
) -> Result<OptResult, OptError> {
    run(f, dom, budget, seed, opts, false)
}

fn run<F: FnMut(&[f64]) -> f64>(
    f: F,
    dom: &BoxDomain,
    budget: Budget,
    seed: u64,
    opts: &SolveOptions,
    restarts: bool,
) -> Result<OptResult, OptError> {
    let mut ev = Evaluator::new(f, dom, budget, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = HaltonStarts::new(dom.dim(), &mut rng);
    let n = dom.dim();
    let share = (budget.max_evals / 4).max(50 * (n + 1));
    let mut x0 = start_point(dom, opts, || starts.next(dom));
    loop {
        if simplex_search(&mut ev, dom, x0, share).is_err() || !restarts {
            break;
        }
        x0 = starts.next(dom);
    }
    Ok(ev.finish())
}

fn simplex_search<F: FnMut(&[f64]) -> f64>(
    ev: &mut Evaluator<'_, F>,
    dom: &BoxDomain,
    x0: Vec<f64>,
    share: usize,
) -> Result<(), Halt> {
    let n = dom.dim();
    let budget_end = ev.evals() + share.min(ev.remaining());
    let tol = 1e-6 * dom.diagonal();

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.clone());
    for j in 0..n {
        let mut p = x0.clone();
        let delta = 0.1 * dom.width(j);
        p[j] = if p[j] + delta <= dom.hi()[j] { p[j] + delta } else { p[j] - delta };
        pts.push(p);
    }
    let mut vals = Vec::with_capacity(n + 1);
    for p in &pts {
        vals.push(ev.eval(p)?);
    }

    let clamp = |mut p: Vec<f64>| {
        dom.clamp(&mut p);
        p
    };
    let mut flat_iters = 0;
    while ev.evals() < budget_end {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let diameter = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if diameter < tol {
            return Ok(());
        }
        if vals[n] == vals[0] {
            flat_iters += 1;
            if flat_iters > n {
                return Ok(());
            }
        } else {
            flat_iters = 0;
        }

        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| clamp((0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect());

        let xr = along(-1.0);
        let fr = ev.eval(&xr)?;
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = ev.eval(&xe)?;
            if fe < fr {
                (pts[n], vals[n]) = (xe, fe);
            } else {
                (pts[n], vals[n]) = (xr, fr);
            }
            continue;
        }
        if fr < vals[n - 1] {
            (pts[n], vals[n]) = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(-0.5);
            let fc = ev.eval(&xc)?;
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = ev.eval(&xc)?;
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            (pts[n], vals[n]) = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=n {
            let p = clamp((0..n).map(|j| pts[0][j] + 0.5 * (pts[i][j] - pts[0][j])).collect());
            vals[i] = ev.eval(&p)?;
            pts[i] = p;
        }
    }
    Ok(())
}
