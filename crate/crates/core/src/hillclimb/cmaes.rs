//! CMA-ES with the default parameter set, run in box-normalised coordinates
//! `[0,1]^n` with initial step size 0.3.
//!
//! Samples falling outside the box are redrawn up to 100 times and then
//! clamped; the clamped point is what enters the update. The strategy
//! restarts from a uniform random mean when the step size falls below `1e-9`,
//! the covariance becomes ill-conditioned or non-finite, or a generation's
//! values stay flat (relative spread `≤ 1e-12`) for ten generations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{BoxDomain, Budget, Evaluator, Halt, OptError, OptResult, SolveOptions};

const SIGMA0: f64 = 0.3;
const MAX_RESAMPLES: usize = 100;
const FLAT_GENERATIONS: usize = 10;

/// Default population size `4 + ⌊3 ln n⌋`.
pub fn cmaes_population_size(n: usize) -> usize {
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

pub fn minimize_cmaes<F: FnMut(&[f64]) -> f64>(
    f: F,
    dom: &BoxDomain,
    budget: Budget,
    seed: u64,
    opts: &SolveOptions,
) -> Result<OptResult, OptError> {
    let mut ev = Evaluator::new(f, dom, budget, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let _ = run(&mut ev, dom, &mut rng, opts);
    Ok(ev.finish())
}

struct Params {
    lambda: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl Params {
    fn new(n: usize) -> Self {
        let nf = n as f64;
        let lambda = cmaes_population_size(n);
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self { lambda, weights, mu_eff, c_sigma, d_sigma, c_c, c_1, c_mu, chi_n }
    }
}

struct State {
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    generation: usize,
    flat: usize,
}

impl State {
    fn new(mean: DVector<f64>) -> Self {
        let n = mean.len();
        Self {
            mean,
            sigma: SIGMA0,
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            generation: 0,
            flat: 0,
        }
    }

    /// Recomputes `B` and `D` from `C`; false when the covariance degenerated.
    fn decompose(&mut self) -> bool {
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        if sym.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let eig = SymmetricEigen::new(sym.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(min > 0.0) || max / min > 1e14 {
            return false;
        }
        self.cov = sym;
        self.basis = eig.eigenvectors;
        self.scales = eig.eigenvalues.map(f64::sqrt);
        true
    }

    fn collapsed(&self) -> bool {
        !self.sigma.is_finite() || self.sigma * self.scales.max() < 1e-9
    }
}

fn inside_unit(x: &DVector<f64>) -> bool {
    x.iter().all(|v| (0.0..=1.0).contains(v))
}

fn run<F: FnMut(&[f64]) -> f64>(
    ev: &mut Evaluator<'_, F>,
    dom: &BoxDomain,
    rng: &mut ChaCha8Rng,
    opts: &SolveOptions,
) -> Result<(), Halt> {
    let n = dom.dim();
    let p = Params::new(n);
    let mu = p.weights.len();

    let first_mean = match &opts.start {
        Some(s) if s.len() == n => {
            let mut s = s.clone();
            dom.clamp(&mut s);
            ev.eval(&s)?;
            DVector::from_vec(dom.to_unit(&s))
        }
        _ => DVector::from_element(n, 0.5),
    };
    let mut st = State::new(first_mean);

    loop {
        let mut samples: Vec<(DVector<f64>, DVector<f64>, f64)> = Vec::with_capacity(p.lambda);
        for _ in 0..p.lambda {
            let mut x = DVector::zeros(n);
            for attempt in 0..=MAX_RESAMPLES {
                let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                x = &st.mean + st.sigma * (&st.basis * z.component_mul(&st.scales));
                if inside_unit(&x) || attempt == MAX_RESAMPLES {
                    break;
                }
            }
            x.apply(|v| *v = v.clamp(0.0, 1.0));
            let y = (&x - &st.mean) / st.sigma;
            let value = ev.eval(&dom.from_unit(x.as_slice()))?;
            samples.push((x, y, value));
        }
        samples.sort_by(|a, b| a.2.total_cmp(&b.2));

        let spread = samples[p.lambda - 1].2 - samples[0].2;
        let scale = samples[0].2.abs().max(1e-300);
        st.flat = if spread <= 1e-12 * scale || !spread.is_finite() && samples[0].2 == samples[p.lambda - 1].2 {
            st.flat + 1
        } else {
            0
        };

        let old_mean = st.mean.clone();
        st.mean = DVector::zeros(n);
        for (w, s) in p.weights.iter().zip(&samples) {
            st.mean += *w * &s.0;
        }
        let y_w = (&st.mean - &old_mean) / st.sigma;

        let inv_sqrt = &st.basis * DMatrix::from_diagonal(&st.scales.map(|d| 1.0 / d)) * st.basis.transpose();
        st.p_sigma =
            (1.0 - p.c_sigma) * &st.p_sigma + (p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff).sqrt() * (&inv_sqrt * &y_w);
        st.generation += 1;
        let ps_norm = st.p_sigma.norm();
        let h_sigma = ps_norm / (1.0 - (1.0 - p.c_sigma).powi(2 * st.generation as i32)).sqrt() / p.chi_n
            < 1.4 + 2.0 / (n as f64 + 1.0);
        let h = if h_sigma { 1.0 } else { 0.0 };
        st.p_c = (1.0 - p.c_c) * &st.p_c + h * (p.c_c * (2.0 - p.c_c) * p.mu_eff).sqrt() * &y_w;

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, s) in p.weights.iter().zip(samples.iter().take(mu)) {
            rank_mu += *w * &s.1 * s.1.transpose();
        }
        st.cov = (1.0 - p.c_1 - p.c_mu) * &st.cov
            + p.c_1 * (&st.p_c * st.p_c.transpose() + (1.0 - h) * p.c_c * (2.0 - p.c_c) * &st.cov)
            + p.c_mu * rank_mu;
        st.sigma *= ((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0)).exp();
        st.sigma = st.sigma.min(1.0);

        if !st.decompose() || st.collapsed() || st.flat >= FLAT_GENERATIONS {
            let restart = DVector::from_fn(n, |_, _| rng.random::<f64>());
            st = State::new(restart);
        }
    }
}
