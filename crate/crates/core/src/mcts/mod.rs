//! Two-layer falsification: Monte Carlo tree search over sequences of input
//! cells, with a hill-climbing playout scoring each newly expanded node.
//!
//! A node's word `a_1…a_d` confines the first `d` control points of the
//! piecewise-constant input to the cells `Reg(a_1)…Reg(a_d)`. Expanding the
//! child `wa` runs the configured solver with `u_1…u_d` in those cells,
//! `u_{d+1}` in `Reg(a)` and the remaining control points free; the best
//! robustness found becomes the child's reward and is propagated upwards as a
//! minimum. Once the tree budget is spent without a falsifying input, a final
//! hill-climb runs inside the cells of the best prefix.

mod convex;
mod search;
mod space;
mod tree;

use std::sync::Arc;

use thiserror::Error;

use crate::models::{simulate, SimError, SystemModel};
use crate::signal::{PiecewiseConstantInput, SignalError};
use crate::stl::{EvalError, Formula, Monitor};

pub use convex::{maximal_convex_subset, CellBox};
pub use search::{Expansion, SampleRecord, Search, SearchParams, SearchReport, Variant};
pub use space::{Action, InputSpace};
pub use tree::{ucb_score, ucb_select, ChildStat, Node, NodeId, Tree};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MctsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Monitor(#[from] EvalError),
}

/// Result of a falsification run.
#[derive(Debug, Clone, PartialEq)]
pub enum FalsificationOutcome {
    FalsifyingInput {
        input: PiecewiseConstantInput,
        robustness: f64,
    },
    /// No counterexample; the best prefix of cells and the lowest robustness seen.
    BestPrefix {
        word: Vec<Action>,
        robustness: f64,
    },
}

impl FalsificationOutcome {
    pub fn is_falsified(&self) -> bool {
        matches!(self, FalsificationOutcome::FalsifyingInput { .. })
    }

    pub fn robustness(&self) -> f64 {
        match self {
            FalsificationOutcome::FalsifyingInput { robustness, .. }
            | FalsificationOutcome::BestPrefix { robustness, .. } => *robustness,
        }
    }
}

/// Robustness of a system against a formula as a function of the flat
/// `K × M` control-point vector.
pub struct SystemObjective {
    model: Arc<dyn SystemModel>,
    monitor: Monitor,
    space: InputSpace,
    step: f64,
    names: Vec<String>,
}

impl SystemObjective {
    pub fn new(model: Arc<dyn SystemModel>, phi: &Formula, space: InputSpace) -> Result<Self, MctsError> {
        if space.dims() != model.inputs().len() {
            return Err(MctsError::InvalidArgument(format!(
                "input space has {} dimensions, model `{}` has {}",
                space.dims(),
                model.name(),
                model.inputs().len()
            )));
        }
        let step = space.realization_step(model.nominal_step());
        let monitor = Monitor::new(phi, model.outputs(), step)?;
        let names = model.inputs().iter().map(|r| r.name.clone()).collect();
        Ok(Self { model, monitor, space, step, names })
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn input(&self, flat: &[f64]) -> Result<PiecewiseConstantInput, MctsError> {
        Ok(PiecewiseConstantInput::from_flat(self.space.horizon(), self.space.dims(), flat)?)
    }

    /// Simulates the input and returns its robustness.
    pub fn evaluate(&self, u: &PiecewiseConstantInput) -> Result<f64, MctsError> {
        let signal = u.realize_named(self.step, self.names.clone())?;
        let out = simulate(self.model.as_ref(), &signal)?;
        Ok(self.monitor.robustness(&out)?)
    }

    /// Objective value for the solvers: failures become `+∞`.
    pub fn value(&self, flat: &[f64]) -> f64 {
        self.input(flat).and_then(|u| self.evaluate(&u)).unwrap_or(f64::INFINITY)
    }
}

/// Runs preprocessing and, when needed, the final hill-climb on a model.
pub fn falsify(objective: &SystemObjective, params: &SearchParams) -> Result<SearchReport, MctsError> {
    let mut f = |x: &[f64]| objective.value(x);
    let mut search = Search::new(objective.space().clone(), params.clone(), &mut f)?;
    Ok(search.run())
}
