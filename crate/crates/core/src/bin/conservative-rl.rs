use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use conservative_rl::config::{Environment, ExperimentConfig};
use conservative_rl::envs::build_sigma_sigma_policy;
use conservative_rl::harness::{self, AvgProblem, FhProblem};
use conservative_rl::mdp::exact_gain_bias;
use conservative_rl::output::{self, Format};
use conservative_rl::Error;

#[derive(Parser)]
#[command(name = "conservative-rl", version, about = "Conservative exploration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration (TOML).
    config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed override.
    #[arg(long, env = "CONSERVATIVE_RL_SEED")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full seeded experiment and write aggregate results.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Run-count override.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Exact gain and bias (or finite-horizon values) of a policy.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "baseline")]
        policy: PolicyChoice,
    },
    /// Single run with a per-episode trace of the conservative condition.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyChoice {
    Baseline,
    Optimal,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidModel(_) | Error::InvalidPolicy(_) | Error::InvalidDelta(_) => {
                Failure::Config(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Failure::Config(format!("{}: {e}", common.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn run(common: &Common, format: Format, runs: Option<usize>) -> Result<(), Failure> {
    let mut cfg = load(common)?;
    if let Some(n) = runs {
        cfg.runs = n;
    }
    cfg.validate()?;
    let outcome = harness::run_experiment(&cfg)?;
    for (seed, msg) in &outcome.failed {
        eprintln!("seed {seed} failed: {msg}");
    }
    write_out(common.out.as_deref(), &output::render(&outcome.aggregate, format)?)?;
    if outcome.failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{} of {} runs failed", outcome.failed.len(), cfg.runs)))
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn solve(common: &Common, choice: PolicyChoice) -> Result<(), Failure> {
    let cfg = load(common)?;
    let mut text = String::new();
    match &cfg.environment {
        Environment::Inventory(spec) => {
            let problem = AvgProblem::from_config(&cfg)?;
            let policy = match choice {
                PolicyChoice::Baseline => build_sigma_sigma_policy(cfg.baseline.threshold, cfg.baseline.target, spec)?,
                PolicyChoice::Optimal => harness::optimal_gain(&problem.mdp, cfg.confidence)?.1,
            };
            let gb = exact_gain_bias(&policy, &problem.mdp)?;
            text.push_str(&format!("gain = {}\nspan = {}\nbias = [{}]\n", gb.gain, gb.span, fmt_vec(&gb.bias)));
        }
        Environment::Gridworld(_) => {
            let problem = FhProblem::from_config(&cfg)?;
            let values = match choice {
                PolicyChoice::Baseline => conservative_rl::mdp::exact_fh_values(&problem.baseline, &problem.mdp),
                PolicyChoice::Optimal => conservative_rl::mdp::optimal_fh_values(&problem.mdp, problem.horizon())?.0,
            };
            for (h, v) in values.iter().enumerate() {
                text.push_str(&format!("stage {} = [{}]\n", h + 1, fmt_vec(v)));
            }
        }
    }
    write_out(common.out.as_deref(), text.as_bytes())
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn check(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["episode", "start", "length", "played", "policy", "condition", "lower_value", "epsilon", "violation"])
        .map_err(std::io::Error::from)?;
    let (episodes, flags, per_episode) = match cfg.environment {
        Environment::Inventory(_) => {
            let problem = AvgProblem::from_config(&cfg)?;
            let trace = harness::run_avg_seed(&cfg, &problem, cfg.seed)?;
            let flags = harness::check_violation_stream_avg(&trace, &problem.mdp, &problem.baseline, cfg.alpha);
            (trace.episodes, flags, false)
        }
        Environment::Gridworld(_) => {
            let problem = FhProblem::from_config(&cfg)?;
            let trace = harness::run_fh_seed(&cfg, &problem, cfg.seed)?;
            let flags = harness::check_violation_stream_fh(&trace, &problem.mdp, &problem.baseline, cfg.alpha);
            (trace.episodes, flags, true)
        }
    };
    let mut offset = 0usize;
    for ep in &episodes {
        let span = if per_episode { 1 } else { ep.length as usize };
        let violated = flags[offset..offset + span].iter().any(|&f| f);
        offset += span;
        w.write_record([
            ep.index.to_string(),
            ep.start.to_string(),
            ep.length.to_string(),
            format!("{:?}", ep.played).to_lowercase(),
            ep.policy.to_string(),
            opt(ep.condition_value),
            opt(ep.lower_value),
            ep.epsilon.to_string(),
            violated.to_string(),
        ])
        .map_err(std::io::Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    write_out(common.out.as_deref(), &bytes)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common, format, runs } => run(common, *format, *runs),
        Command::Solve { common, policy } => solve(common, *policy),
        Command::Check { common } => check(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
