//! `npbandit`: run bandit regret experiments, replay logged data and
//! aggregate per-replication traces.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use npbandit_core::harness::{
    read_traces_csv, replication_rng, AggregateTable, ExperimentConfig, ScenarioRef, VERSION,
};
use npbandit_core::{
    replay, run_experiment, Error, GibbsConfig, LoggedDataset, PolicyKind, PyConfig,
    ScenarioSpec,
};

#[derive(Parser, Debug)]
#[command(name = "npbandit", version, about = "Nonparametric mixture Thompson sampling for contextual bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate replications of a policy on a scenario and write regret CSVs.
    Run(RunArgs),
    /// Evaluate a policy on logged bandit data by rejection replay.
    Replay(ReplayArgs),
    /// Aggregate per-replication CSVs into a mean/std table.
    Aggregate(AggregateArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PolicyName {
    /// Pitman-Yor mixture Thompson sampling
    Nonparametric,
    /// Finite mixture with the true component count per arm
    Oracle,
    /// Single Gaussian linear regression per arm
    Linear,
    /// Uniformly random arm
    Uniform,
}

#[derive(Args, Debug, Default)]
struct PolicyArgs {
    /// Policy to run [default: nonparametric, or the config file's policy]
    #[arg(long, value_enum)]
    policy: Option<PolicyName>,
    /// Pitman-Yor concentration gamma [default: 0.1]
    #[arg(long)]
    gamma: Option<f64>,
    /// Pitman-Yor discount d [default: 0]
    #[arg(long)]
    discount: Option<f64>,
    /// Maximum Gibbs sweeps per observation [default: 10]
    #[arg(long)]
    gibbs_max: Option<usize>,
    /// Relative log-likelihood change that ends the Gibbs sweeps [default: 0.01]
    #[arg(long)]
    gibbs_eps: Option<f64>,
    /// Oracle components per arm, comma separated; one value applies to all
    /// arms [default: the scenario's true counts]
    #[arg(long, value_delimiter = ',')]
    oracle_k: Option<Vec<usize>>,
    /// Oracle Dirichlet concentration, split evenly over components [default: 0.1]
    #[arg(long)]
    oracle_concentration: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON experiment config; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario [default: A]
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(npbandit_core::BUILTIN_SCENARIOS), conflicts_with = "scenario_file")]
    scenario: Option<String>,
    /// JSON scenario file
    #[arg(long)]
    scenario_file: Option<PathBuf>,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Interactions per replication [default: 500]
    #[arg(long)]
    horizon: Option<usize>,
    /// Number of replications [default: 100]
    #[arg(long)]
    reps: Option<usize>,
    /// Base seed of all replication streams [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Per-replication CSV; the aggregate goes next to it as <stem>.agg.csv
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads [default: 1]
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// CSV with header context_0,...,context_{d-1},arm,reward
    #[arg(long)]
    log_file: PathBuf,
    /// Number of arms [default: largest logged arm + 1]
    #[arg(long)]
    arms: Option<usize>,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Seed of the policy's random stream
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the result as JSON to this file as well as stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AggregateArgs {
    /// Per-replication CSVs written by `run`
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    /// Aggregate CSV to write
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        // configuration problems surfaced by the library are usage errors
        match e.downcast_ref::<Error>() {
            Some(
                Error::UnknownScenario { .. }
                | Error::InvalidConfig(_)
                | Error::InvalidHyper(_)
                | Error::DimensionMismatch { .. },
            ) => Failure::Usage(render(&e)),
            _ => Failure::Runtime(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return ExitCode::SUCCESS;
            }
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", usage_for_args());
            }
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Replay(args) => cmd_replay(args),
        Command::Aggregate(args) => cmd_aggregate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(2)
        }
    }
}

/// Usage of the subcommand named on the command line, or of the whole tool.
fn usage_for_args() -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let named = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let sub = named.and_then(|n| cmd.find_subcommand(&n).cloned());
    match sub {
        Some(mut sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

/// Error chain joined by `: `, skipping causes already spelled out by their parent.
fn render(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.contains(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}

fn read_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Runtime)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Policy from flags layered over an optional base policy.
fn resolve_policy(
    args: &PolicyArgs,
    base: Option<PolicyKind>,
    scenario: Option<&ScenarioSpec>,
) -> Result<PolicyKind, Failure> {
    let base = match (args.policy, base) {
        (None, Some(kind)) => kind,
        (name, _) => match name.unwrap_or(PolicyName::Nonparametric) {
            PolicyName::Nonparametric => PolicyKind::nonparametric(),
            PolicyName::Oracle => {
                let k = match (&args.oracle_k, scenario) {
                    (Some(k), _) => k.clone(),
                    (None, Some(spec)) => spec.components_per_arm(),
                    (None, None) => {
                        return Err(Failure::Usage(
                            "--oracle-k is required when the true component counts are unknown"
                                .into(),
                        ))
                    }
                };
                PolicyKind::oracle(k)
            }
            PolicyName::Linear => PolicyKind::linear_gaussian(),
            PolicyName::Uniform => PolicyKind::UniformRandom,
        },
    };
    let gibbs_override = |g: &mut GibbsConfig| {
        if let Some(m) = args.gibbs_max {
            g.max_iters = m;
        }
        if let Some(e) = args.gibbs_eps {
            g.epsilon = e;
        }
    };
    let kind = match base {
        PolicyKind::Nonparametric {
            mut py,
            mut gibbs,
            prior,
        } => {
            if let Some(g) = args.gamma {
                py.concentration = g;
            }
            if let Some(d) = args.discount {
                py.discount = d;
            }
            gibbs_override(&mut gibbs);
            PyConfig::new(py.discount, py.concentration)?;
            GibbsConfig::new(gibbs.epsilon, gibbs.max_iters)?;
            PolicyKind::Nonparametric { py, gibbs, prior }
        }
        PolicyKind::OracleMixture {
            mut components,
            mut concentration,
            mut gibbs,
            prior,
        } => {
            if let Some(k) = &args.oracle_k {
                components = k.clone();
            }
            if let Some(c) = args.oracle_concentration {
                concentration = c;
            }
            gibbs_override(&mut gibbs);
            GibbsConfig::new(gibbs.epsilon, gibbs.max_iters)?;
            PolicyKind::OracleMixture {
                components,
                concentration,
                gibbs,
                prior,
            }
        }
        other => other,
    };
    Ok(kind)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let file_cfg: Option<ExperimentConfig> = match &args.config {
        Some(path) => Some(read_config(path)?),
        None => None,
    };
    let scenario = match (&args.scenario, &args.scenario_file, &file_cfg) {
        (Some(name), _, _) => ScenarioRef::Builtin(name.clone()),
        (None, Some(path), _) => ScenarioRef::Inline(ScenarioSpec::from_json_file(path)?),
        (None, None, Some(cfg)) => cfg.scenario.clone(),
        (None, None, None) => ScenarioRef::Builtin("A".into()),
    };
    let spec = scenario.resolve()?;
    let policy = resolve_policy(
        &args.policy,
        file_cfg.as_ref().map(|c| c.policy.clone()),
        Some(&spec),
    )?;
    let pick = |flag: Option<usize>, from_file: Option<usize>, default: usize| {
        flag.or(from_file).unwrap_or(default)
    };
    let cfg = ExperimentConfig {
        scenario,
        policy,
        horizon: pick(args.horizon, file_cfg.as_ref().map(|c| c.horizon), 500),
        replications: pick(args.reps, file_cfg.as_ref().map(|c| c.replications), 100),
        base_seed: args
            .seed
            .or(file_cfg.as_ref().map(|c| c.base_seed))
            .unwrap_or(0),
        output_path: args
            .out
            .clone()
            .or_else(|| file_cfg.as_ref().and_then(|c| c.output_path.clone())),
        parallelism: pick(args.parallelism, file_cfg.as_ref().map(|c| c.parallelism), 1),
    };
    cfg.validate()?;
    let out = run_experiment(&cfg)?;
    let last = out.aggregate.last();
    println!(
        "{} on {} ({} reps, T={}): cumulative pseudo-regret {:.4} ± {:.4} (std), realized {:.4} ± {:.4}",
        cfg.policy.name(),
        match &cfg.scenario {
            ScenarioRef::Builtin(n) => n.as_str(),
            ScenarioRef::Inline(_) => "inline scenario",
        },
        cfg.replications,
        cfg.horizon,
        last.mean_cum_pseudo,
        last.std_cum_pseudo,
        last.mean_cum_realized,
        last.std_cum_realized,
    );
    if let Some(path) = &cfg.output_path {
        println!(
            "wrote {} and {}",
            path.display(),
            npbandit_core::harness::aggregate_path(path).display()
        );
    }
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<(), Failure> {
    let log = LoggedDataset::read_csv(&args.log_file, args.arms)
        .with_context(|| format!("reading {}", args.log_file.display()))?;
    if log.num_arms == 0 {
        return Err(Failure::Usage("log file has no events and --arms was not given".into()));
    }
    let kind = resolve_policy(&args.policy, None, None)?;
    let mut policy = kind.build(log.num_arms, log.context_dim)?;
    let mut rng = replication_rng(args.seed, 0, true);
    let outcome = replay(&log.events, policy.as_mut(), &mut rng)?;
    let json = serde_json::json!({
        "version": VERSION,
        "log_file": args.log_file,
        "policy": kind,
        "seed": args.seed,
        "num_arms": log.num_arms,
        "events_seen": outcome.events_seen,
        "accepted_count": outcome.accepted_count,
        "click_sum": outcome.click_sum,
        "ctr": outcome.ctr,
    });
    let text = serde_json::to_string_pretty(&json).expect("serializable");
    println!("{text}");
    if outcome.ctr.is_none() {
        eprintln!("note: no events were accepted; CTR is undefined");
    }
    if let Some(path) = &args.out {
        std::fs::write(path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_aggregate(args: AggregateArgs) -> Result<(), Failure> {
    let mut traces = Vec::new();
    for path in &args.inputs {
        traces.extend(read_traces_csv(path).with_context(|| format!("reading {}", path.display()))?);
    }
    let table = AggregateTable::from_traces(&traces)?;
    let metadata = vec![
        format!("version: {VERSION}"),
        format!(
            "aggregated_from: {}",
            args.inputs
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
        format!("replications: {}", traces.len()),
    ];
    let file = File::create(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    table.write_csv(file, &metadata)?;
    println!("aggregated {} replications into {}", traces.len(), args.out.display());
    Ok(())
}
