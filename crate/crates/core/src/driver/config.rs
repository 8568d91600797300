use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::hillclimb::Solver;
use crate::mcts::{InputSpace, SearchParams, Variant};
use crate::models::{builtin, ExternalModel, InputRange, SystemModel};
use crate::stl::{parse, Formula};

use super::DriverError;

/// Named specifications shipped with the tool, keyed by preset id.
pub const SPEC_PRESETS: &[(&str, &str)] = &[
    ("s1", "[][0,30] (speed < 120)"),
    ("s2", "[][0,30] ((gear >= 2.5 && gear <= 3.5) -> speed >= 20)"),
    ("s3", "<>[10,30] (speed < 53 || speed > 57)"),
    ("s4", "[][0,29] (speed < 100) || [][29,30] (speed > 65)"),
    ("s5", "[][0,30] (rpm < 4770 || [][0,1] (rpm > 600))"),
    (
        "strap",
        "!(<>[0,5] (x >= 3.9 && x <= 4.1 && y >= 3.9 && y <= 4.1 \
         && xdot >= -1 && xdot <= 1 && ydot >= -1 && ydot <= 1))",
    ),
];

pub fn spec_preset(name: &str) -> Option<&'static str> {
    SPEC_PRESETS.iter().find(|(n, _)| *n == name).map(|(_, f)| *f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantName {
    Random,
    Hillclimb,
    MctsBasic,
    MctsPw,
}

impl VariantName {
    pub const ALL: [VariantName; 4] =
        [VariantName::Random, VariantName::Hillclimb, VariantName::MctsBasic, VariantName::MctsPw];

    pub fn as_str(self) -> &'static str {
        match self {
            VariantName::Random => "random",
            VariantName::Hillclimb => "hillclimb",
            VariantName::MctsBasic => "mcts-basic",
            VariantName::MctsPw => "mcts-pw",
        }
    }
}

impl fmt::Display for VariantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantName {
    type Err = DriverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VariantName::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| {
            DriverError::Config(format!("unknown variant `{s}` (random | hillclimb | mcts-basic | mcts-pw)"))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// `ffr`, `car` or `external`.
    pub id: String,
    /// Program and arguments of an external model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<InputRange>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Per-simulation timeout of an external model, in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub variant: VariantName,
    pub solver: Solver,
    pub control_points: usize,
    pub partitions: Vec<usize>,
    pub c: f64,
    pub widening: f64,
    pub alpha: f64,
    /// Tree samples in preprocessing.
    pub budget: usize,
    pub warm_start: bool,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            variant: VariantName::MctsBasic,
            solver: Solver::Cmaes,
            control_points: 5,
            partitions: vec![3, 5],
            c: 0.2,
            widening: 0.7,
            alpha: 0.85,
            budget: 40,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    /// Simulations per playout.
    pub playout_sims: usize,
    /// Playout timeout in seconds; with `sims_per_second` it overrides
    /// `playout_sims` by `ceil(timeout · rate)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub playout_timeout_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sims_per_second: Option<f64>,
    pub final_sims: usize,
    /// Simulations per trial across all stages; also the random and
    /// hill-climb baselines' budget. Defaults to `budget·playout + final`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim_cap: Option<usize>,
    /// Wall-clock limit per trial in seconds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
}

impl Default for BudgetSection {
    fn default() -> Self {
        Self {
            playout_sims: 100,
            playout_timeout_s: None,
            sims_per_second: None,
            final_sims: 2000,
            sim_cap: None,
            wall_clock_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSection {
    pub trials: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads for independent trials.
    pub workers: usize,
    /// Include every tree node in the per-trial JSON.
    pub tree_dump: bool,
    /// Exit with status 0 even when no trial falsified.
    pub always_succeed: bool,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self { trials: 10, seed: 0, out: None, workers: 1, tree_dump: false, always_succeed: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub spec: SpecSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default)]
    pub report: ReportSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, DriverError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is representable in TOML")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, DriverError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DriverError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// A built-in experiment: `s1`–`s5` on the surrogate car, `strap` on
    /// the free-floating robot.
    pub fn preset(name: &str) -> Result<Self, DriverError> {
        spec_preset(name).ok_or_else(|| DriverError::UnknownPreset(name.into()))?;
        let spec = SpecSection { preset: Some(name.into()), formula: None };
        let builtin_model = |id: &str| ModelSection {
            id: id.into(),
            command: None,
            inputs: None,
            outputs: None,
            horizon: None,
            step: None,
            timeout_s: None,
        };
        let cfg = if name == "strap" {
            ExperimentConfig {
                model: builtin_model("ffr"),
                spec,
                search: SearchSection { control_points: 3, partitions: vec![2, 2, 2, 2], ..SearchSection::default() },
                budget: BudgetSection {
                    playout_sims: 30,
                    final_sims: 800,
                    sim_cap: Some(2000),
                    ..BudgetSection::default()
                },
                report: ReportSection::default(),
            }
        } else {
            ExperimentConfig {
                model: builtin_model("car"),
                spec,
                // S4 needs one decision in the middle of the horizon, so it gets
                // coarser segments and a smaller alphabet
                search: if name == "s4" {
                    SearchSection { control_points: 3, partitions: vec![3, 2], ..SearchSection::default() }
                } else {
                    SearchSection::default()
                },
                budget: BudgetSection {
                    playout_sims: 30,
                    final_sims: 800,
                    sim_cap: Some(2000),
                    ..BudgetSection::default()
                },
                report: ReportSection::default(),
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn playout_sims(&self) -> usize {
        match (self.budget.playout_timeout_s, self.budget.sims_per_second) {
            (Some(t), Some(rate)) => ((t * rate).ceil() as usize).max(1),
            _ => self.budget.playout_sims,
        }
    }

    pub fn sim_cap(&self) -> usize {
        self.budget.sim_cap.unwrap_or(self.search.budget * self.playout_sims() + self.budget.final_sims)
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        let bad = |m: String| Err(DriverError::Config(m));
        let s = &self.search;
        if s.control_points == 0 {
            return bad("search.control_points must be at least 1".into());
        }
        if s.partitions.is_empty() || s.partitions.contains(&0) {
            return bad("search.partitions must list positive counts".into());
        }
        if s.budget == 0 {
            return bad("search.budget must be at least 1".into());
        }
        if !(s.c.is_finite() && s.c >= 0.0) {
            return bad(format!("search.c must be non-negative, got {}", s.c));
        }
        if !(s.widening.is_finite() && s.widening > 0.0) {
            return bad(format!("search.widening must be positive, got {}", s.widening));
        }
        if !(s.alpha > 0.0 && s.alpha <= 1.0) {
            return bad(format!("search.alpha must lie in (0, 1], got {}", s.alpha));
        }
        if self.playout_sims() == 0 {
            return bad("budget.playout_sims must be at least 1".into());
        }
        if self.sim_cap() == 0 {
            return bad("budget.sim_cap must be at least 1".into());
        }
        if self.budget.wall_clock_s.is_some_and(|w| !(w.is_finite() && w > 0.0)) {
            return bad("budget.wall_clock_s must be positive".into());
        }
        if self.report.trials == 0 {
            return bad("report.trials must be at least 1".into());
        }
        match (&self.spec.preset, &self.spec.formula) {
            (Some(_), Some(_)) => return bad("spec: give either `preset` or `formula`, not both".into()),
            (None, None) => return bad("spec: one of `preset` or `formula` is required".into()),
            _ => {}
        }
        Ok(())
    }

    pub fn formula(&self) -> Result<Formula, DriverError> {
        let text = match (&self.spec.preset, &self.spec.formula) {
            (Some(p), _) => spec_preset(p).ok_or_else(|| DriverError::UnknownPreset(p.clone()))?,
            (None, Some(f)) => f.as_str(),
            (None, None) => return Err(DriverError::Config("no specification given".into())),
        };
        Ok(parse(text)?)
    }

    pub fn model(&self) -> Result<Arc<dyn SystemModel>, DriverError> {
        let m = &self.model;
        if m.id != "external" {
            return builtin(&m.id).ok_or_else(|| DriverError::UnknownModel(m.id.clone()));
        }
        let missing = |field: &str| DriverError::Config(format!("external model needs model.{field}"));
        let step = m.step.ok_or_else(|| missing("step"))?;
        let horizon = m.horizon.ok_or_else(|| missing("horizon"))?;
        if !(step > 0.0 && horizon > 0.0) {
            return Err(DriverError::Config("model.step and model.horizon must be positive".into()));
        }
        Ok(Arc::new(ExternalModel {
            command: m.command.clone().filter(|c| !c.is_empty()).ok_or_else(|| missing("command"))?,
            inputs: m.inputs.clone().ok_or_else(|| missing("inputs"))?,
            outputs: m.outputs.clone().ok_or_else(|| missing("outputs"))?,
            horizon,
            step,
            timeout: Duration::from_secs_f64(m.timeout_s.unwrap_or(60.0)),
        }))
    }

    pub fn input_space(&self, model: &dyn SystemModel) -> Result<InputSpace, DriverError> {
        Ok(InputSpace::new(
            model.inputs().to_vec(),
            self.search.control_points,
            self.search.partitions.clone(),
            model.horizon(),
        )?)
    }

    /// Search parameters of one trial; `variant` must be an MCTS variant.
    pub fn search_params(&self, seed: u64) -> SearchParams {
        let variant = match self.search.variant {
            VariantName::MctsPw => {
                Variant::ProgressiveWidening { widening: self.search.widening, alpha: self.search.alpha }
            }
            _ => Variant::Basic,
        };
        SearchParams {
            variant,
            c: self.search.c,
            budget: self.search.budget,
            solver: self.search.solver,
            playout_evals: self.playout_sims(),
            final_evals: self.budget.final_sims,
            sim_cap: Some(self.sim_cap()),
            warm_start: self.search.warm_start,
            seed,
            wall_clock: self.wall_clock(),
        }
    }

    pub fn wall_clock(&self) -> Option<Duration> {
        self.budget.wall_clock_s.map(Duration::from_secs_f64)
    }
}
