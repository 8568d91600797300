//! Black-box system models: anything that maps an input signal on `[0, T]`
//! to an output signal on the same grid.

mod car;
mod external;
mod ffr;
mod rk4;

use std::sync::Arc;

use thiserror::Error;

use crate::signal::Signal;

pub use car::{CarParams, SurrogateCar};
pub use external::ExternalModel;
pub use ffr::{ffr_derivative, FreeFloatingRobot};
pub use rk4::{rk4_integrate, rk4_step};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("simulation diverged at t = {time}")]
    Diverged { time: f64 },
    #[error("external model: {0}")]
    External(String),
    #[error("external model timed out after {0:.3} s")]
    Timeout(f64),
}

/// Name and admissible range `[min, max]` of one input dimension.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InputRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl InputRange {
    pub fn new(name: impl Into<String>, min: f64, max: f64) -> Self {
        Self { name: name.into(), min, max }
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    fn tolerance(&self) -> f64 {
        1e-9 * self.min.abs().max(self.max.abs()).max(self.width())
    }
}

/// A deterministic simulator. Implementations receive inputs that were
/// already validated and clamped by [`simulate`].
pub trait SystemModel: Send + Sync {
    fn name(&self) -> &str;

    fn inputs(&self) -> &[InputRange];

    fn outputs(&self) -> &[String];

    /// Time horizon the model's benchmarks are stated over.
    fn horizon(&self) -> f64;

    /// Preferred sample spacing of input and output signals.
    fn nominal_step(&self) -> f64;

    fn run(&self, u: &Signal) -> Result<Signal, SimError>;
}

/// Simulates `model` on `u` after checking dimensions and ranges. Samples
/// within a relative `1e-9` of a bound are clamped onto it.
pub fn simulate(model: &dyn SystemModel, u: &Signal) -> Result<Signal, SimError> {
    let ranges = model.inputs();
    if u.dim() != ranges.len() {
        return Err(SimError::InvalidInput(format!(
            "{} expects {} inputs, got {}",
            model.name(),
            ranges.len(),
            u.dim()
        )));
    }
    let mut data = u.as_flat().to_vec();
    let mut clamped = false;
    for (k, v) in data.iter_mut().enumerate() {
        let r = &ranges[k % ranges.len()];
        if *v < r.min || *v > r.max {
            if *v < r.min - r.tolerance() || *v > r.max + r.tolerance() {
                return Err(SimError::InvalidInput(format!(
                    "{} = {v} at t = {} outside [{}, {}]",
                    r.name,
                    u.time(k / ranges.len()),
                    r.min,
                    r.max
                )));
            }
            *v = v.clamp(r.min, r.max);
            clamped = true;
        }
    }
    let out = if clamped {
        let fixed = Signal::from_flat(u.step(), u.var_names().to_vec(), data)
            .map_err(|e| SimError::InvalidInput(e.to_string()))?;
        model.run(&fixed)?
    } else {
        model.run(u)?
    };
    if out.len() != u.len() {
        return Err(SimError::External(format!("output has {} samples for {} input samples", out.len(), u.len())));
    }
    Ok(out)
}

/// Built-in models by id: `"ffr"` and `"car"`.
pub fn builtin(id: &str) -> Option<Arc<dyn SystemModel>> {
    match id {
        "ffr" => Some(Arc::new(FreeFloatingRobot::default())),
        "car" => Some(Arc::new(SurrogateCar::default())),
        _ => None,
    }
}
