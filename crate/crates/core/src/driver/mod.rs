//! Experiment orchestration: configuration, baselines, batches of seeded
//! trials and their JSON/CSV artifacts.

mod config;
mod trial;

use thiserror::Error;

use crate::hillclimb::OptError;
use crate::mcts::MctsError;
use crate::stl::ParseError;

pub use config::{
    spec_preset, BudgetSection, ExperimentConfig, ModelSection, ReportSection, SearchSection, SpecSection, VariantName,
    SPEC_PRESETS,
};
pub use trial::{
    run_batch, run_trial, sweep, trial_seed, BatchReport, NodeDump, TreeStats, TrialBudgets, TrialParams, TrialReport,
    TrialResult, BATCH_CSV_HEADER, SWEEP_PARAMS,
};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("configuration: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unknown model `{0}` (ffr | car | external)")]
    UnknownModel(String),
    #[error("unknown spec preset `{0}`")]
    UnknownPreset(String),
    #[error("specification: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Search(#[from] MctsError),
    #[error(transparent)]
    Solver(#[from] OptError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
