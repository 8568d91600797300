use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::hillclimb::{Budget, SolveOptions, Solver};
use crate::mcts::{falsify, Action, FalsificationOutcome, InputSpace, SystemObjective, Tree};

use super::config::{ExperimentConfig, VariantName};
use super::DriverError;

pub const BATCH_CSV_HEADER: &str = "variant,solver,trial,seed,falsified,robustness,simulations,wall_s";

/// Parameters `sweep` can vary.
pub const SWEEP_PARAMS: &[&str] = &["c", "budget", "playout_sims", "final_sims", "widening", "alpha"];

const BASELINE_STREAM: u64 = 5;

/// Seed of trial `i` under a master seed.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    master ^ trial as u64
}

/// Extended reals in JSON: finite values as numbers, the rest as
/// `"inf"`, `"-inf"` or `"nan"`.
mod ext_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not an extended real: {other}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBudgets {
    pub mcts: usize,
    pub playout_sims: usize,
    pub final_sims: usize,
    pub sim_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: Vec<usize>,
    pub c: f64,
    #[serde(rename = "C")]
    pub widening: f64,
    pub alpha: f64,
    pub budgets: TrialBudgets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub falsified: bool,
    #[serde(with = "ext_real")]
    pub robustness: f64,
    /// Control-point levels of the best input found, `K` rows of `M` values.
    pub input_levels: Option<Vec<Vec<f64>>>,
    pub iterations: usize,
    pub simulations: usize,
    pub wall_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    pub nodes: usize,
    pub depth_histogram: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDump {
    pub word: Vec<Action>,
    #[serde(rename = "N")]
    pub visits: u64,
    #[serde(rename = "R", with = "ext_real")]
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub variant: VariantName,
    pub solver: Solver,
    pub trial: usize,
    pub seed: u64,
    pub params: TrialParams,
    pub result: TrialResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree_stats: Option<TreeStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<Vec<NodeDump>>,
}

impl TrialReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.variant,
            self.solver,
            self.trial,
            self.seed,
            self.result.falsified,
            self.result.robustness,
            self.result.simulations,
            self.result.wall_s
        )
    }
}

fn dump_tree(tree: &Tree, space: &InputSpace) -> Vec<NodeDump> {
    tree.nodes()
        .iter()
        .map(|n| NodeDump {
            word: n.word.iter().map(|&a| space.action(a)).collect(),
            visits: n.visits,
            reward: n.reward,
        })
        .collect()
}

/// Uniform i.i.d. inputs over the full box until a negative robustness or
/// the simulation cap.
fn random_search(objective: &SystemObjective, cap: usize, cfg: &ExperimentConfig, seed: u64) -> (Vec<f64>, f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(BASELINE_STREAM);
    let dom = objective.space().playout_domain(&[]);
    let clock = Stopwatch::start();
    let wall = cfg.wall_clock();
    let mut best = (dom.center(), f64::INFINITY);
    let mut sims = 0;
    while sims < cap && !wall.is_some_and(|w| clock.elapsed() >= w) {
        let x = dom.sample_uniform(&mut rng);
        let v = objective.value(&x);
        sims += 1;
        if v < best.1 || sims == 1 {
            best = (x, v);
        }
        if v < 0.0 {
            break;
        }
    }
    (best.0, best.1, sims)
}

/// One trial of the configured variant with the given seed.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize, seed: u64) -> Result<TrialReport, DriverError> {
    let model = cfg.model()?;
    let phi = cfg.formula()?;
    let space = cfg.input_space(model.as_ref())?;
    let objective = SystemObjective::new(model, &phi, space.clone())?;
    let cap = cfg.sim_cap();
    let clock = Stopwatch::start();

    let (best, iterations, simulations, tree) = match cfg.search.variant {
        VariantName::Random => {
            let (x, v, sims) = random_search(&objective, cap, cfg, seed);
            ((x, v), 0, sims, None)
        }
        VariantName::Hillclimb => {
            let dom = space.playout_domain(&[]);
            let mut budget = Budget::evals(cap);
            budget.wall_clock = cfg.wall_clock();
            let opts = SolveOptions { stop_on_negative: true, start: None };
            let res = cfg.search.solver.minimize(|x| objective.value(x), &dom, budget, seed, &opts)?;
            ((res.best_point, res.best_value), 0, res.evals_used, None)
        }
        VariantName::MctsBasic | VariantName::MctsPw => {
            let report = falsify(&objective, &cfg.search_params(seed))?;
            let best = match &report.outcome {
                FalsificationOutcome::FalsifyingInput { input, robustness } => (input.flat(), *robustness),
                FalsificationOutcome::BestPrefix { .. } => {
                    (report.best_input.as_ref().map(|u| u.flat()).unwrap_or_default(), report.best_robustness)
                }
            };
            (best, report.iterations, report.simulations, Some(report.tree))
        }
    };
    let (point, robustness) = best;
    let input_levels = (!point.is_empty()).then(|| point.chunks(space.dims()).map(<[f64]>::to_vec).collect::<Vec<_>>());

    Ok(TrialReport {
        variant: cfg.search.variant,
        solver: cfg.search.solver,
        trial,
        seed,
        params: TrialParams {
            k: cfg.search.control_points,
            l: cfg.search.partitions.clone(),
            c: cfg.search.c,
            widening: cfg.search.widening,
            alpha: cfg.search.alpha,
            budgets: TrialBudgets {
                mcts: cfg.search.budget,
                playout_sims: cfg.playout_sims(),
                final_sims: cfg.budget.final_sims,
                sim_cap: cap,
            },
        },
        result: TrialResult {
            falsified: robustness < 0.0,
            robustness,
            input_levels,
            iterations,
            simulations,
            wall_s: clock.elapsed_s(),
        },
        tree_stats: tree.as_ref().map(|t| TreeStats { nodes: t.len(), depth_histogram: t.depth_histogram() }),
        tree: tree.filter(|_| cfg.report.tree_dump).map(|t| dump_tree(&t, &space)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub variant: VariantName,
    pub solver: Solver,
    pub master_seed: u64,
    pub trials: Vec<TrialReport>,
}

impl BatchReport {
    pub fn successes(&self) -> usize {
        self.trials.iter().filter(|t| t.result.falsified).count()
    }

    fn mean_over_successes(&self, f: impl Fn(&TrialReport) -> f64) -> Option<f64> {
        let ok: Vec<f64> = self.trials.iter().filter(|t| t.result.falsified).map(f).collect();
        (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64)
    }

    pub fn mean_wall_s(&self) -> Option<f64> {
        self.mean_over_successes(|t| t.result.wall_s)
    }

    pub fn mean_simulations(&self) -> Option<f64> {
        self.mean_over_successes(|t| t.result.simulations as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(BATCH_CSV_HEADER);
        out.push('\n');
        for t in &self.trials {
            let _ = writeln!(out, "{}", t.csv_row());
        }
        out
    }

    pub fn summary_line(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.1}"));
        format!(
            "{} / {}: {}/{} falsified, mean sims {}, mean time {} s",
            self.variant,
            self.solver,
            self.successes(),
            self.trials.len(),
            fmt(self.mean_simulations()),
            fmt(self.mean_wall_s())
        )
    }

    /// Writes `trial_<i>.json` per trial and `batch.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), DriverError> {
        std::fs::create_dir_all(dir)?;
        for t in &self.trials {
            let json = serde_json::to_string_pretty(t)?;
            std::fs::write(dir.join(format!("trial_{}.json", t.trial)), json + "\n")?;
        }
        std::fs::write(dir.join("batch.csv"), self.to_csv())?;
        Ok(())
    }
}

/// Runs all trials of a configuration on `report.workers` threads.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchReport, DriverError> {
    cfg.validate()?;
    // resolve model, spec and input space before any simulation
    let model = cfg.model()?;
    let phi = cfg.formula()?;
    SystemObjective::new(model.clone(), &phi, cfg.input_space(model.as_ref())?)?;

    let n = cfg.report.trials;
    let master = cfg.report.seed;
    let workers = cfg.report.workers.clamp(1, n);
    let trials = if workers == 1 {
        (0..n).map(|i| run_trial(cfg, i, trial_seed(master, i))).collect::<Result<Vec<_>, _>>()?
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<TrialReport, DriverError>>>> = Mutex::new((0..n).map(|_| None).collect());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let r = run_trial(cfg, i, trial_seed(master, i));
                    slots.lock().expect("no worker panicked holding the lock")[i] = Some(r);
                });
            }
        });
        slots
            .into_inner()
            .expect("workers joined")
            .into_iter()
            .map(|r| r.expect("every trial index was claimed"))
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(BatchReport { variant: cfg.search.variant, solver: cfg.search.solver, master_seed: master, trials })
}

fn apply_param(cfg: &mut ExperimentConfig, param: &str, value: f64) -> Result<(), DriverError> {
    let count = |v: f64| {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(DriverError::Config(format!("{param} must be a positive integer, got {v}")))
        }
    };
    match param {
        "c" => cfg.search.c = value,
        "budget" => cfg.search.budget = count(value)?,
        "playout_sims" => cfg.budget.playout_sims = count(value)?,
        "final_sims" => cfg.budget.final_sims = count(value)?,
        "widening" => cfg.search.widening = value,
        "alpha" => cfg.search.alpha = value,
        other => {
            return Err(DriverError::Config(format!("cannot sweep `{other}` (one of {})", SWEEP_PARAMS.join(", "))))
        }
    }
    cfg.validate()
}

/// One batch per value of `param`, all under the same master seed. With
/// `report.out` set, batch `v` is written to `<out>/<param>_<v>/`.
pub fn sweep(cfg: &ExperimentConfig, param: &str, values: &[f64]) -> Result<Vec<(f64, BatchReport)>, DriverError> {
    let mut configs = Vec::with_capacity(values.len());
    for &v in values {
        let mut c = cfg.clone();
        apply_param(&mut c, param, v)?;
        configs.push((v, c));
    }
    let mut out = Vec::with_capacity(configs.len());
    for (v, c) in configs {
        let batch = run_batch(&c)?;
        if let Some(dir) = &cfg.report.out {
            batch.write(&dir.join(format!("{param}_{v}")))?;
        }
        out.push((v, batch));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(variant: VariantName, formula: &str) -> ExperimentConfig {
        let mut c = ExperimentConfig::preset("strap").unwrap();
        c.spec.preset = None;
        c.spec.formula = Some(formula.into());
        c.search.variant = variant;
        c.search.budget = 4;
        c.budget.playout_sims = 5;
        c.budget.final_sims = 20;
        c.budget.sim_cap = Some(40);
        c.report.trials = 2;
        c
    }

    #[test]
    fn true_spec_exhausts_the_cap() {
        for v in VariantName::ALL {
            let batch = run_batch(&tiny(v, "true")).unwrap();
            assert_eq!(batch.successes(), 0, "{v}");
            for t in &batch.trials {
                assert!(t.result.simulations <= 40);
                assert_eq!(t.result.robustness, f64::INFINITY);
            }
        }
        let random = run_batch(&tiny(VariantName::Random, "true")).unwrap();
        assert!(random.trials.iter().all(|t| t.result.simulations == 40));
    }

    #[test]
    fn false_spec_needs_one_simulation() {
        for v in VariantName::ALL {
            let batch = run_batch(&tiny(v, "false")).unwrap();
            assert_eq!(batch.successes(), 2, "{v}");
            assert!(batch.trials.iter().all(|t| t.result.simulations == 1), "{v}");
        }
    }

    #[test]
    fn reports_round_trip_through_json() {
        let mut cfg = tiny(VariantName::MctsPw, "[][0,5] (x < 1)");
        cfg.report.tree_dump = true;
        let t = run_trial(&cfg, 0, 7).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"K\":3") && json.contains("\"depth_histogram\""));
        let back: TrialReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        let dump = t.tree.unwrap();
        assert_eq!(dump.len(), t.tree_stats.unwrap().nodes);
        assert!(dump[0].word.is_empty());

        let inf = TrialResult {
            falsified: false,
            robustness: f64::INFINITY,
            input_levels: None,
            iterations: 0,
            simulations: 0,
            wall_s: 0.0,
        };
        let text = serde_json::to_string(&inf).unwrap();
        assert!(text.contains("\"robustness\":\"inf\""));
        assert_eq!(serde_json::from_str::<TrialResult>(&text).unwrap(), inf);
    }

    #[test]
    fn batches_are_reproducible_and_parallel_safe() {
        let mut cfg = tiny(VariantName::MctsBasic, "[][0,5] (x < 0.5)");
        cfg.report.trials = 3;
        let strip = |b: &BatchReport| {
            b.trials
                .iter()
                .map(|t| (t.seed, t.result.falsified, t.result.robustness.to_bits(), t.result.simulations))
                .collect::<Vec<_>>()
        };
        let a = run_batch(&cfg).unwrap();
        cfg.report.workers = 3;
        let b = run_batch(&cfg).unwrap();
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.trials.iter().map(|t| t.seed).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(a.to_csv().starts_with(BATCH_CSV_HEADER));
        assert_eq!(a.to_csv().lines().count(), 4);
    }

    #[test]
    fn unknown_variables_fail_before_simulating() {
        let cfg = tiny(VariantName::Random, "[][0,5] (speed < 1)");
        assert!(matches!(run_batch(&cfg), Err(DriverError::Search(_))));
    }

    #[test]
    fn sweep_rejects_unknown_parameters() {
        let cfg = tiny(VariantName::MctsBasic, "true");
        assert!(sweep(&cfg, "gamma", &[1.0]).is_err());
        assert!(sweep(&cfg, "budget", &[1.5]).is_err());
    }
}
