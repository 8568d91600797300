//! Falsification of hybrid systems against signal temporal logic
//! specifications.
//!
//! The search has two layers. Monte Carlo tree search chooses, control point
//! by control point, which cell of a partitioned input space each segment of
//! a piecewise-constant input should come from; a box-constrained stochastic
//! optimizer then picks concrete input values inside those cells so as to
//! minimise the robustness of the specification on the simulated output.
//! A negative robustness is a counterexample.
//!
//! * [`signal`] – sampled signals and piecewise-constant inputs
//! * [`stl`] – formulas, parser and robust semantics
//! * [`models`] – the system-model interface and built-in benchmarks
//! * [`hillclimb`] – simulated annealing, restarted Nelder–Mead, CMA-ES
//! * [`mcts`] – the two-layered search
//! * [`driver`] – experiment configuration, baselines, batches and reports

pub mod clock;
pub mod driver;
pub mod hillclimb;
pub mod mcts;
pub mod models;
pub mod signal;
pub mod stl;
