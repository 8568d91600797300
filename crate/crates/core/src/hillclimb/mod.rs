//! Box-constrained stochastic minimisation of black-box objectives.
//!
//! All three solvers share one contract: the objective is evaluated only at
//! points inside the box, `+∞` marks a failed evaluation and is treated as a
//! rejected proposal, and the best point seen is returned together with the
//! full evaluation history. With [`SolveOptions::stop_on_negative`] a solver
//! returns as soon as it sees a negative value.

mod cmaes;
mod nelder_mead;
mod sa;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::Rng;
use thiserror::Error;

use crate::clock::Stopwatch;

pub use cmaes::{cmaes_population_size, minimize_cmaes};
pub use nelder_mead::{halton, minimize_nm, minimize_nm_single};
pub use sa::minimize_sa;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Product of closed intervals `[lo_j, hi_j]` with `lo_j < hi_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, OptError> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(OptError::InvalidArgument("bounds must be non-empty and of equal length".into()));
        }
        for (j, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(OptError::InvalidArgument(format!("coordinate {j}: [{l}, {h}] is degenerate")));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn from_intervals(bounds: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, OptError> {
        let (lo, hi) = bounds.into_iter().unzip();
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, j: usize) -> f64 {
        self.hi[j] - self.lo[j]
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn diagonal(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(j, v)| *v >= self.lo[j] && *v <= self.hi[j])
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lo[j], self.hi[j]);
        }
    }

    pub fn sample_uniform(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.dim()).map(|j| rng.random_range(self.lo[j]..=self.hi[j])).collect()
    }

    /// Maps `z ∈ [0,1]^n` into the box.
    pub fn from_unit(&self, z: &[f64]) -> Vec<f64> {
        z.iter().enumerate().map(|(j, t)| self.lo[j] + t * self.width(j)).collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(j, v)| (v - self.lo[j]) / self.width(j)).collect()
    }
}

/// Evaluation budget. The evaluation count is authoritative; the optional
/// wall clock is checked between evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub max_evals: usize,
    pub wall_clock: Option<Duration>,
}

impl Budget {
    pub fn evals(max_evals: usize) -> Self {
        Self { max_evals, wall_clock: None }
    }

    pub fn with_wall_clock(mut self, limit: Duration) -> Self {
        self.wall_clock = Some(limit);
        self
    }

    fn validate(&self) -> Result<(), OptError> {
        if self.max_evals == 0 {
            return Err(OptError::InvalidArgument("evaluation budget must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveOptions {
    /// Return right after the first negative objective value.
    pub stop_on_negative: bool,
    /// Initial point (clamped into the box); solvers pick their own otherwise.
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evals_used: usize,
    pub history: Vec<(Vec<f64>, f64)>,
}

impl OptResult {
    /// Best value after each evaluation; non-increasing.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.history
            .iter()
            .scan(f64::INFINITY, |best, (_, v)| {
                if *v < *best {
                    *best = *v;
                }
                Some(*best)
            })
            .collect()
    }

    /// History as `eval,value,x0,x1,...` CSV.
    pub fn history_csv(&self) -> String {
        let dim = self.best_point.len();
        let mut out = String::from("eval,value");
        for j in 0..dim {
            out.push_str(&format!(",x{j}"));
        }
        out.push('\n');
        for (i, (x, v)) in self.history.iter().enumerate() {
            out.push_str(&format!("{},{v}", i + 1));
            for c in x {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

/// The lower-layer solver families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Sa,
    Gnm,
    Cmaes,
}

impl Solver {
    pub const ALL: [Solver; 3] = [Solver::Cmaes, Solver::Gnm, Solver::Sa];

    pub fn minimize<F: FnMut(&[f64]) -> f64>(
        self,
        f: F,
        dom: &BoxDomain,
        budget: Budget,
        seed: u64,
        opts: &SolveOptions,
    ) -> Result<OptResult, OptError> {
        match self {
            Solver::Sa => minimize_sa(f, dom, budget, seed, opts),
            Solver::Gnm => minimize_nm(f, dom, budget, seed, opts),
            Solver::Cmaes => minimize_cmaes(f, dom, budget, seed, opts),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Sa => "sa",
            Solver::Gnm => "gnm",
            Solver::Cmaes => "cmaes",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Solver {
    type Err = OptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sa" => Ok(Solver::Sa),
            "gnm" => Ok(Solver::Gnm),
            "cmaes" => Ok(Solver::Cmaes),
            other => Err(OptError::InvalidArgument(format!("unknown solver `{other}` (sa | gnm | cmaes)"))),
        }
    }
}

/// Raised inside a solver loop when the evaluation must stop.
#[derive(Debug)]
struct Halt;

/// Counts evaluations, enforces the budget and remembers the best point.
struct Evaluator<'d, F> {
    f: F,
    dom: &'d BoxDomain,
    budget: Budget,
    clock: Stopwatch,
    stop_on_negative: bool,
    best_point: Option<Vec<f64>>,
    best_value: f64,
    history: Vec<(Vec<f64>, f64)>,
}

impl<'d, F: FnMut(&[f64]) -> f64> Evaluator<'d, F> {
    fn new(f: F, dom: &'d BoxDomain, budget: Budget, opts: &SolveOptions) -> Result<Self, OptError> {
        budget.validate()?;
        Ok(Self {
            f,
            dom,
            budget,
            clock: Stopwatch::start(),
            stop_on_negative: opts.stop_on_negative,
            best_point: None,
            best_value: f64::INFINITY,
            history: Vec::new(),
        })
    }

    fn evals(&self) -> usize {
        self.history.len()
    }

    fn remaining(&self) -> usize {
        self.budget.max_evals - self.evals()
    }

    fn exhausted(&self) -> bool {
        self.evals() >= self.budget.max_evals
            || self.budget.wall_clock.is_some_and(|w| self.clock.elapsed() >= w)
            || (self.stop_on_negative && self.best_value < 0.0)
    }

    /// Evaluates at `x` clamped into the box. NaN is reported as `+∞`.
    fn eval(&mut self, x: &[f64]) -> Result<f64, Halt> {
        if self.exhausted() {
            return Err(Halt);
        }
        let mut p = x.to_vec();
        self.dom.clamp(&mut p);
        let mut v = (self.f)(&p);
        if v.is_nan() {
            v = f64::INFINITY;
        }
        if v < self.best_value || self.best_point.is_none() {
            self.best_value = v;
            self.best_point = Some(p.clone());
        }
        self.history.push((p, v));
        Ok(v)
    }

    fn finish(self) -> OptResult {
        OptResult {
            best_point: self.best_point.unwrap_or_else(|| self.dom.center()),
            best_value: self.best_value,
            evals_used: self.history.len(),
            history: self.history,
        }
    }
}

/// Start point from options (clamped) or `fallback`.
fn start_point(dom: &BoxDomain, opts: &SolveOptions, fallback: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
    match &opts.start {
        Some(s) if s.len() == dom.dim() => {
            let mut p = s.clone();
            dom.clamp(&mut p);
            p
        }
        _ => fallback(),
    }
}

#[cfg(test)]
pub(crate) mod test_functions {
    pub fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    pub fn rastrigin(x: &[f64]) -> f64 {
        10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> BoxDomain {
        BoxDomain::new(vec![-1.0; n], vec![1.0; n]).unwrap()
    }

    #[test]
    fn box_validation() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![], vec![]).is_err());
        assert!(BoxDomain::new(vec![0.0], vec![f64::INFINITY]).is_err());
        let d = BoxDomain::from_intervals([(0.0, 2.0), (-1.0, 1.0)]).unwrap();
        assert_eq!(d.center(), vec![1.0, 0.0]);
        assert_eq!(d.from_unit(&d.to_unit(&[0.5, 0.25])), vec![0.5, 0.25]);
    }

    #[test]
    fn zero_budget_rejected_for_every_solver() {
        for s in Solver::ALL {
            let r = s.minimize(|_| 0.0, &unit(2), Budget::evals(0), 1, &SolveOptions::default());
            assert!(r.is_err(), "{s}");
        }
    }

    #[test]
    fn constant_objective_and_invariants() {
        for s in Solver::ALL {
            let r = s.minimize(|_| 3.5, &unit(3), Budget::evals(57), 9, &SolveOptions::default()).unwrap();
            assert_eq!(r.best_value, 3.5, "{s}");
            assert!(r.evals_used <= 57);
            assert!(unit(3).contains(&r.best_point));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        for s in Solver::ALL {
            let run = || {
                s.minimize(test_functions::rastrigin, &unit(3), Budget::evals(300), 42, &SolveOptions::default())
                    .unwrap()
            };
            assert_eq!(run(), run(), "{s}");
        }
    }

    #[test]
    fn stop_on_negative_returns_early() {
        for s in Solver::ALL {
            let opts = SolveOptions { stop_on_negative: true, start: None };
            let r = s.minimize(|x| x[0] + 0.9, &unit(2), Budget::evals(1000), 3, &opts).unwrap();
            assert!(r.best_value < 0.0, "{s}");
            assert_eq!(r.history.last().unwrap().1, r.best_value, "{s}");
            assert!(r.evals_used < 1000);
        }
    }

    #[test]
    fn failed_evaluations_are_skipped() {
        for s in Solver::ALL {
            let f = |x: &[f64]| if x[0] > 0.0 { f64::INFINITY } else { (x[0] + 0.5).powi(2) + x[1].powi(2) };
            let r = s.minimize(f, &unit(2), Budget::evals(400), 5, &SolveOptions::default()).unwrap();
            assert!(r.best_value.is_finite(), "{s}");
            assert!(r.best_point[0] <= 0.0);
        }
    }

    #[test]
    fn all_points_inside_box_and_history_consistent() {
        let dom = BoxDomain::from_intervals([(0.0, 1.0), (10.0, 20.0), (-5.0, -4.0)]).unwrap();
        for s in Solver::ALL {
            let r =
                s.minimize(|x| -(x[0] + x[1] + x[2]), &dom, Budget::evals(500), 11, &SolveOptions::default()).unwrap();
            assert!(r.history.iter().all(|(p, _)| dom.contains(p)), "{s}");
            let min = r.history.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
            assert_eq!(min, r.best_value);
            assert!(r.best_so_far().windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn wall_clock_cap_stops_solvers() {
        for s in Solver::ALL {
            let budget = Budget::evals(usize::MAX).with_wall_clock(Duration::from_millis(30));
            let r = s.minimize(test_functions::sphere, &unit(2), budget, 1, &SolveOptions::default()).unwrap();
            assert!(r.evals_used > 0);
        }
    }

    #[test]
    fn warm_start_is_evaluated_first() {
        for s in Solver::ALL {
            let opts = SolveOptions { stop_on_negative: false, start: Some(vec![0.25, -0.75]) };
            let r = s.minimize(test_functions::sphere, &unit(2), Budget::evals(50), 1, &opts).unwrap();
            assert_eq!(r.history[0].0, vec![0.25, -0.75], "{s}");
        }
    }

    #[test]
    fn history_csv_layout() {
        let r = Solver::Sa
            .minimize(test_functions::sphere, &unit(2), Budget::evals(3), 1, &SolveOptions::default())
            .unwrap();
        let csv = r.history_csv();
        assert!(csv.starts_with("eval,value,x0,x1\n1,"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn solver_names() {
        for s in Solver::ALL {
            assert_eq!(s.as_str().parse::<Solver>().unwrap(), s);
        }
        assert!("bfgs".parse::<Solver>().is_err());
    }
}
