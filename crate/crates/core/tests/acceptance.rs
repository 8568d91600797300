//! Acceptance harness: runs every criterion and prints one PASS/FAIL line
//! each. Exits with status 1 if any criterion fails.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use falsify_core::driver::{
    run_batch, run_trial, sweep, trial_seed, BatchReport, ExperimentConfig, TrialReport, VariantName, BATCH_CSV_HEADER,
};
use falsify_core::hillclimb::{BoxDomain, Budget, SolveOptions, Solver};
use falsify_core::mcts::{SystemObjective, Variant};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn preset(name: &str, variant: VariantName, solver: Solver, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(name).expect("preset exists");
    cfg.search.variant = variant;
    cfg.search.solver = solver;
    cfg.report.trials = 10;
    cfg.report.seed = seed;
    cfg.report.workers = workers();
    cfg
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let check = common::check_corpus(20_240_601, 1000);
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!("{} formulas, {} mismatches, {secs:.1} s", check.cases, check.mismatches.len());
    if let Some(m) = check.mismatches.first() {
        detail += &format!("; first: {m}");
    }
    Outcome::new(check.mismatches.is_empty() && secs < 30.0, detail)
}

fn sign_soundness() -> Outcome {
    let check = common::check_corpus(20_240_601, 1000);
    let mut detail = format!("{} non-zero cases, {} violations", check.sign_checked, check.sign_violations.len());
    if let Some(m) = check.sign_violations.first() {
        detail += &format!("; first: {m}");
    }
    Outcome::new(check.sign_violations.is_empty(), detail)
}

fn tree_invariants() -> Outcome {
    let variants = [Variant::Basic, Variant::DEFAULT_PW];
    let mut checks = 0;
    let mut errors = Vec::new();
    for seed in 0..100 {
        for variant in variants {
            match common::audit_run(variant, seed, 40, &mut common::bumpy) {
                Ok(n) => checks += n,
                Err(e) => errors.push(e),
            }
        }
    }
    let mut detail = format!("200 runs, {checks} post-sample audits, {} violations", errors.len());
    if let Some(e) = errors.first() {
        detail += &format!("; first: {e}");
    }
    Outcome::new(errors.is_empty() && checks == 200 * 40, detail)
}

/// Re-simulates a reported witness, both directly and after a JSON round
/// trip of the whole trial report.
fn witness_error(cfg: &ExperimentConfig, t: &TrialReport) -> Option<String> {
    let model = cfg.model().ok()?;
    let phi = cfg.formula().ok()?;
    let space = cfg.input_space(model.as_ref()).ok()?;
    let obj = SystemObjective::new(Arc::clone(&model), &phi, space).ok()?;
    let json = serde_json::to_string(t).expect("report serialises");
    let back: TrialReport = serde_json::from_str(&json).expect("report parses");
    for (label, report) in [("report", t), ("json", &back)] {
        let Some(levels) = &report.result.input_levels else {
            return Some(format!("trial {}: falsified without an input", t.trial));
        };
        let flat: Vec<f64> = levels.concat();
        let r = obj.input(&flat).and_then(|u| obj.evaluate(&u));
        match r {
            Ok(r) if r.to_bits() == t.result.robustness.to_bits() && r < 0.0 => {}
            Ok(r) => {
                return Some(format!("trial {} ({label}): reported {}, re-simulated {r}", t.trial, t.result.robustness))
            }
            Err(e) => return Some(format!("trial {} ({label}): {e}", t.trial)),
        }
    }
    None
}

fn strap(seed: u64) -> (Outcome, Vec<(ExperimentConfig, BatchReport)>) {
    let start = Instant::now();
    let mut batches = Vec::new();
    for variant in [VariantName::MctsBasic, VariantName::MctsPw, VariantName::Random] {
        let cfg = preset("strap", variant, Solver::Cmaes, seed);
        match run_batch(&cfg) {
            Ok(b) => batches.push((cfg, b)),
            Err(e) => return (Outcome::new(false, format!("{variant}: {e}")), batches),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let counts: Vec<usize> = batches.iter().map(|(_, b)| b.successes()).collect();
    let random = counts[2];
    let pass = counts[..2].iter().all(|&c| c >= 7 && c >= random) && secs < 600.0;
    let detail = format!(
        "basic {}/10, pw {}/10, random {random}/10 (cmaes, cap {}), {secs:.0} s",
        counts[0],
        counts[1],
        batches[0].0.sim_cap()
    );
    (Outcome::new(pass, detail), batches)
}

fn s4_round(seed: u64) -> Result<(bool, String, Vec<(ExperimentConfig, BatchReport)>), String> {
    let mut batches = Vec::new();
    let mut beats = [0usize; 2];
    let mut parts = Vec::new();
    for solver in Solver::ALL {
        let mut counts = [0usize; 3];
        for (i, variant) in
            [VariantName::Hillclimb, VariantName::MctsBasic, VariantName::MctsPw].into_iter().enumerate()
        {
            let cfg = preset("s4", variant, solver, seed);
            let b = run_batch(&cfg).map_err(|e| format!("{solver}/{variant}: {e}"))?;
            counts[i] = b.successes();
            batches.push((cfg, b));
        }
        for v in 0..2 {
            if counts[v + 1] > counts[0] {
                beats[v] += 1;
            }
        }
        parts.push(format!("{solver} hill/basic/pw {}/{}/{}", counts[0], counts[1], counts[2]));
    }
    let pass = beats.iter().all(|&b| b >= 2);
    Ok((pass, format!("seed {seed}: {}", parts.join(", ")), batches))
}

fn s4() -> (Outcome, Vec<(ExperimentConfig, BatchReport)>) {
    let mut all = Vec::new();
    let mut details = Vec::new();
    for seed in [1000, 2000] {
        match s4_round(seed) {
            Ok((pass, d, batches)) => {
                all.extend(batches);
                details.push(d);
                if pass {
                    return (Outcome::new(true, details.join("; ")), all);
                }
            }
            Err(e) => return (Outcome::new(false, e), all),
        }
    }
    (Outcome::new(false, details.join("; ")), all)
}

fn calibration() -> Outcome {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let sphere = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    let dom4 = BoxDomain::new(vec![-5.0; 4], vec![5.0; 4]).expect("valid box");
    let hits = |solver: Solver, evals: usize, tol: f64| {
        (0..10)
            .filter(|&s| {
                solver.minimize(sphere, &dom4, Budget::evals(evals), s, &opts).is_ok_and(|r| r.best_value <= tol)
            })
            .count()
    };
    let cma = hits(Solver::Cmaes, 3000, 1e-6);
    let sa = hits(Solver::Sa, 5000, 1e-2);
    let dom1 = BoxDomain::new(vec![-10.0], vec![10.0]).expect("valid box");
    let gnm = (0..10)
        .filter(|&s| {
            Solver::Gnm
                .minimize(|x: &[f64]| (x[0] - 2.0).powi(2), &dom1, Budget::evals(200), s, &opts)
                .is_ok_and(|r| (r.best_point[0] - 2.0).abs() <= 1e-4)
        })
        .count();
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        cma >= 9 && sa >= 8 && gnm == 10 && secs < 60.0,
        format!("cmaes sphere {cma}/10, sa sphere {sa}/10, gnm quadratic {gnm}/10, {secs:.1} s"),
    )
}

fn sweep_mechanics() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut cfg = preset("strap", VariantName::MctsPw, Solver::Cmaes, 77);
    cfg.report.trials = 4;
    cfg.search.budget = 6;
    cfg.budget.playout_sims = 10;
    cfg.budget.final_sims = 40;
    cfg.budget.sim_cap = Some(120);
    cfg.report.out = Some(dir.path().to_path_buf());
    let values = [0.02, 0.2, 0.5, 1.0];
    if let Err(e) = sweep(&cfg, "c", &values) {
        return Outcome::new(false, e.to_string());
    }
    let mut problems = Vec::new();
    let mut seed_columns = Vec::new();
    for v in values {
        let path = dir.path().join(format!("c_{v}")).join("batch.csv");
        let mut reader = match csv::Reader::from_path(&path) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        let header = reader.headers().map(|h| h.iter().collect::<Vec<_>>().join(",")).unwrap_or_default();
        if header != BATCH_CSV_HEADER {
            problems.push(format!("c = {v}: header `{header}`"));
        }
        let seed_col = BATCH_CSV_HEADER.split(',').position(|h| h == "seed").expect("seed column");
        let seeds: Vec<String> = reader.records().filter_map(Result::ok).map(|r| r[seed_col].to_string()).collect();
        if seeds.len() != cfg.report.trials {
            problems.push(format!("c = {v}: {} rows", seeds.len()));
        }
        seed_columns.push(seeds);
    }
    let expected: Vec<String> = (0..cfg.report.trials).map(|i| trial_seed(77, i).to_string()).collect();
    if seed_columns.iter().any(|s| *s != expected) {
        problems.push("seeds are not paired across batches".into());
    }
    let detail = if problems.is_empty() {
        format!("4 batch.csv files, {} rows each, identical headers and seeds", cfg.report.trials)
    } else {
        problems.join("; ")
    };
    Outcome::new(problems.is_empty(), detail)
}

fn fingerprint(t: &TrialReport) -> String {
    format!("{} {:016x} {}", t.result.falsified, t.result.robustness.to_bits(), t.result.simulations)
}

fn determinism(batches: &[(ExperimentConfig, BatchReport)]) -> Outcome {
    let mut checked = 0;
    let mut errors = Vec::new();
    // one trial from every batch, rotating through the trial indices
    for (i, (cfg, batch)) in batches.iter().enumerate() {
        let t = &batch.trials[i % batch.trials.len()];
        match run_trial(cfg, t.trial, t.seed) {
            Ok(again) if fingerprint(&again) == fingerprint(t) => checked += 1,
            Ok(again) => errors.push(format!(
                "{}/{} trial {}: `{}` then `{}`",
                cfg.search.variant,
                cfg.search.solver,
                t.trial,
                fingerprint(t),
                fingerprint(&again)
            )),
            Err(e) => errors.push(e.to_string()),
        }
    }
    let mut detail = format!("{checked} trials re-run, {} differences", errors.len());
    if let Some(e) = errors.first() {
        detail += &format!("; first: {e}");
    }
    Outcome::new(errors.is_empty() && checked > 0, detail)
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("[{}] {n} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    report(1, "robustness oracle equivalence", oracle_equivalence());
    report(2, "sign soundness", sign_soundness());
    report(3, "tree invariants", tree_invariants());
    let (strap_outcome, strap_batches) = strap(2018);
    let (s4_outcome, s4_batches) = s4();
    let sweep_outcome = sweep_mechanics();

    let batches: Vec<_> = strap_batches.into_iter().chain(s4_batches).collect();
    let mut falsified = 0;
    let mut witness_errors = Vec::new();
    for (cfg, b) in &batches {
        for t in b.trials.iter().filter(|t| t.result.falsified) {
            falsified += 1;
            if let Some(e) = witness_error(cfg, t) {
                witness_errors.push(e);
            }
        }
    }
    let mut detail = format!("{falsified} falsified trials re-simulated, {} violations", witness_errors.len());
    if let Some(e) = witness_errors.first() {
        detail += &format!("; first: {e}");
    }
    report(4, "witness soundness", Outcome::new(witness_errors.is_empty() && falsified > 0, detail));
    report(5, "strap desk-scale reproduction", strap_outcome);
    report(6, "deceptive landscape superiority", s4_outcome);
    report(7, "optimizer calibration", calibration());
    report(8, "parameter sweep", sweep_outcome);
    report(9, "determinism", determinism(&batches));

    let failed = results.iter().filter(|(_, _, o)| !o.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
