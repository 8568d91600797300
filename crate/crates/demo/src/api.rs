use std::collections::BTreeMap;

use falsify_core::driver::{run_trial, spec_preset, ExperimentConfig, TrialReport, VariantName, SPEC_PRESETS};
use falsify_core::hillclimb::Solver;
use falsify_core::mcts::InputSpace;
use falsify_core::models::{builtin, simulate as run_model, SystemModel};
use falsify_core::signal::{PiecewiseConstantInput, Signal};
use falsify_core::stl::{parse, Monitor};
use serde::{Deserialize, Serialize};

#[derive(Debug, Deserialize)]
struct SimulateRequest {
    model: String,
    levels: Vec<Vec<f64>>,
    #[serde(default)]
    spec: Option<String>,
}

/// Columns of a simulated run, keyed by variable name.
#[derive(Debug, Serialize, Deserialize)]
pub struct Trace {
    pub t: Vec<f64>,
    pub inputs: BTreeMap<String, Vec<f64>>,
    pub outputs: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Evaluation {
    pub robustness: f64,
    pub trace: Trace,
}

#[derive(Debug, Deserialize)]
struct FalsifyRequest {
    preset: String,
    variant: VariantName,
    solver: Solver,
    seed: u64,
    /// Overrides the preset's tree budget; keeps the page responsive.
    #[serde(default)]
    budget: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Falsification {
    pub formula: String,
    pub report: TrialReport,
    pub trace: Option<Trace>,
}

#[derive(Serialize)]
struct PresetInfo {
    name: &'static str,
    model: &'static str,
    formula: &'static str,
}

pub fn presets() -> String {
    let list: Vec<PresetInfo> = SPEC_PRESETS
        .iter()
        .map(|&(name, formula)| PresetInfo { name, model: if name == "strap" { "ffr" } else { "car" }, formula })
        .collect();
    serde_json::to_string(&list).expect("static data serialises")
}

fn columns(w: &Signal) -> BTreeMap<String, Vec<f64>> {
    w.var_names().iter().enumerate().map(|(i, n)| (n.clone(), w.column(i).collect())).collect()
}

fn run(model: &dyn SystemModel, levels: Vec<Vec<f64>>) -> Result<(Signal, Signal), String> {
    let u = PiecewiseConstantInput::new(model.horizon(), levels).map_err(|e| e.to_string())?;
    let space = InputSpace::new(model.inputs().to_vec(), u.control_points(), vec![1; u.dims()], model.horizon())
        .map_err(|e| e.to_string())?;
    let names = model.inputs().iter().map(|r| r.name.clone()).collect();
    let signal = u.realize_named(space.realization_step(model.nominal_step()), names).map_err(|e| e.to_string())?;
    let out = run_model(model, &signal).map_err(|e| e.to_string())?;
    Ok((signal, out))
}

fn trace(u: &Signal, y: &Signal) -> Trace {
    Trace { t: (0..u.len()).map(|j| u.time(j)).collect(), inputs: columns(u), outputs: columns(y) }
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn simulate(request: &str) -> Result<String, String> {
    let req: SimulateRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let model = builtin(&req.model).ok_or_else(|| format!("unknown model `{}`", req.model))?;
    let (u, y) = run(model.as_ref(), req.levels)?;
    json(&trace(&u, &y))
}

pub fn evaluate(request: &str) -> Result<String, String> {
    let req: SimulateRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let spec = req.spec.ok_or("missing `spec`")?;
    let phi = parse(spec_preset(&spec).unwrap_or(&spec)).map_err(|e| e.to_string())?;
    let model = builtin(&req.model).ok_or_else(|| format!("unknown model `{}`", req.model))?;
    let (u, y) = run(model.as_ref(), req.levels)?;
    let robustness =
        Monitor::new(&phi, model.outputs(), u.step()).and_then(|m| m.robustness(&y)).map_err(|e| e.to_string())?;
    json(&Evaluation { robustness, trace: trace(&u, &y) })
}

pub fn falsify(request: &str) -> Result<String, String> {
    let req: FalsifyRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig::preset(&req.preset).map_err(|e| e.to_string())?;
    cfg.search.variant = req.variant;
    cfg.search.solver = req.solver;
    if let Some(b) = req.budget {
        cfg.search.budget = b;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    let report = run_trial(&cfg, 0, req.seed).map_err(|e| e.to_string())?;
    let model = cfg.model().map_err(|e| e.to_string())?;
    let trace = match &report.result.input_levels {
        Some(levels) => {
            let (u, y) = run(model.as_ref(), levels.clone())?;
            Some(trace(&u, &y))
        }
        None => None,
    };
    let formula = cfg.formula().map_err(|e| e.to_string())?.to_string();
    json(&Falsification { formula, report, trace })
}
