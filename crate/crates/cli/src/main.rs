use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use falsify_core::driver::{self, spec_preset, BatchReport, DriverError, ExperimentConfig, VariantName};
use falsify_core::hillclimb::Solver;
use falsify_core::models::{builtin, simulate};
use falsify_core::signal::{Signal, SignalError};
use falsify_core::stl::{parse, EvalError, Monitor, ParseError};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error("specification: {0}")]
    Parse(#[from] ParseError),
    #[error("monitor: {0}")]
    Eval(#[from] EvalError),
    #[error("input signal: {0}")]
    Signal(#[from] SignalError),
    #[error("simulation: {0}")]
    Sim(String),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Parser)]
#[command(name = "falsify", version, about = "Falsify hybrid systems against STL specifications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of seeded trials.
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// One batch per value of a search parameter, under a shared master seed.
    Sweep {
        /// One of c, budget, playout_sims, final_sims, widening, alpha.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Simulate one input signal and print the robustness of the output.
    Robustness {
        /// Built-in model id (ffr | car).
        #[arg(long)]
        model: String,
        /// Preset name (s1..s5, strap) or formula text.
        #[arg(long)]
        spec: String,
        /// CSV with header `t,<input1>,...`.
        #[arg(long)]
        input: PathBuf,
        /// Also write the simulated output trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment instead of a file (s1..s5, strap).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    variant: Option<VariantName>,
    #[arg(long, value_parser = parse_solver)]
    solver: Option<Solver>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    no_warm_start: bool,
    /// Print the merged configuration as TOML and exit.
    #[arg(long)]
    print_effective_config: bool,
}

fn parse_solver(s: &str) -> Result<Solver, String> {
    Solver::ALL.into_iter().find(|v| v.as_str() == s).ok_or_else(|| format!("unknown solver `{s}` (sa | gnm | cmaes)"))
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => return Err(CliError::Usage("need --config or --preset".into())),
        };
        if let Some(v) = self.variant {
            cfg.search.variant = v;
        }
        if let Some(s) = self.solver {
            cfg.search.solver = s;
        }
        if let Some(n) = self.trials {
            cfg.report.trials = n;
        }
        if let Some(s) = self.seed {
            cfg.report.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.report.out = Some(o.clone());
        }
        if let Some(w) = self.workers {
            cfg.report.workers = w;
        }
        if self.no_warm_start {
            cfg.search.warm_start = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_for(cfg: &ExperimentConfig, batches: &[&BatchReport]) -> ExitCode {
    if cfg.report.always_succeed || batches.iter().any(|b| b.successes() > 0) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { exp } => {
            let cfg = exp.config()?;
            if exp.print_effective_config {
                print!("{}", cfg.to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            let batch = driver::run_batch(&cfg)?;
            if let Some(dir) = &cfg.report.out {
                batch.write(dir)?;
            } else {
                print!("{}", batch.to_csv());
            }
            println!("{}", batch.summary_line());
            Ok(exit_for(&cfg, &[&batch]))
        }
        Command::Sweep { param, values, exp } => {
            let cfg = exp.config()?;
            if exp.print_effective_config {
                print!("{}", cfg.to_toml());
                return Ok(ExitCode::SUCCESS);
            }
            let results = driver::sweep(&cfg, &param, &values)?;
            for (v, batch) in &results {
                if cfg.report.out.is_none() {
                    print!("{}", batch.to_csv());
                }
                println!("{param} = {v}: {}", batch.summary_line());
            }
            Ok(exit_for(&cfg, &results.iter().map(|(_, b)| b).collect::<Vec<_>>()))
        }
        Command::Robustness { model, spec, input, trace } => {
            let model = builtin(&model).ok_or(DriverError::UnknownModel(model))?;
            let phi = parse(spec_preset(&spec).unwrap_or(&spec))?;
            let u = Signal::from_csv(std::fs::File::open(&input)?)?;
            let out = simulate(model.as_ref(), &u).map_err(|e| CliError::Sim(e.to_string()))?;
            if let Some(path) = trace {
                std::fs::write(path, out.to_csv())?;
            }
            let r = Monitor::new(&phi, model.outputs(), u.step())?.robustness(&out)?;
            println!("{r}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
