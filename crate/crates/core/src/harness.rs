//! Experiment configuration, replication runner, regret bookkeeping and CSV
//! persistence.
//!
//! Every replication owns two random streams derived from
//! `(base_seed, rep_index)`: one drives the environment, the other the
//! policy. Environment draws therefore do not depend on the policy, and
//! results do not depend on how replications are scheduled across workers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environments::{builtin_scenario, Environment, ScenarioSpec};
use crate::error::{Error, Result};
use crate::policies::PolicyKind;

pub const VERSION: &str = concat!("npbandit ", env!("CARGO_PKG_VERSION"));

pub const TRACE_HEADER: [&str; 9] = [
    "rep",
    "t",
    "arm",
    "reward",
    "realized_regret",
    "pseudo_regret",
    "cum_realized",
    "cum_pseudo",
    "sweeps_run",
];

pub const AGGREGATE_HEADER: [&str; 5] = [
    "t",
    "mean_cum_pseudo",
    "std_cum_pseudo",
    "mean_cum_realized",
    "std_cum_realized",
];

/// A built-in scenario name or an inline scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Builtin(String),
    Inline(ScenarioSpec),
}

impl ScenarioRef {
    pub fn resolve(&self) -> Result<ScenarioSpec> {
        let spec = match self {
            ScenarioRef::Builtin(name) => builtin_scenario(name)?,
            ScenarioRef::Inline(spec) => spec.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioRef,
    pub policy: PolicyKind,
    pub horizon: usize,
    pub replications: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default = "one")]
    pub parallelism: usize,
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioRef, policy: PolicyKind, horizon: usize, replications: usize, base_seed: u64) -> Self {
        Self {
            scenario,
            policy,
            horizon,
            replications,
            base_seed,
            output_path: None,
            parallelism: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be >= 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::InvalidConfig("parallelism must be >= 1".into()));
        }
        Ok(())
    }

    /// Metadata lines describing everything that determines the results.
    /// Scheduling knobs (parallelism, output path) are left out so that the
    /// output bytes depend only on the experiment itself.
    pub fn metadata(&self, spec: &ScenarioSpec) -> Vec<String> {
        let scenario_name = match &self.scenario {
            ScenarioRef::Builtin(name) => name.as_str(),
            ScenarioRef::Inline(_) => "inline",
        };
        vec![
            format!("version: {VERSION}"),
            format!("scenario: {scenario_name}"),
            format!("scenario_spec: {}", serde_json::to_string(spec).expect("serializable")),
            format!("policy: {}", serde_json::to_string(&self.policy).expect("serializable")),
            format!("horizon: {}", self.horizon),
            format!("replications: {}", self.replications),
            format!("base_seed: {}", self.base_seed),
            "replication_streams: ChaCha8(base_seed) stream 2*rep (environment), 2*rep+1 (policy)"
                .to_string(),
        ]
    }
}

/// Random stream of one replication: `ChaCha8` keyed by `base_seed`, with the
/// stream id selecting replication and role.
pub fn replication_rng(base_seed: u64, rep: u64, policy_stream: bool) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(2 * rep + u64::from(policy_stream));
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub arm: usize,
    pub reward: f64,
    pub realized_regret: f64,
    pub pseudo_regret: f64,
    pub cum_realized: f64,
    pub cum_pseudo: f64,
    pub sweeps_run: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub rep: u64,
    pub steps: Vec<StepRecord>,
}

impl RegretTrace {
    /// Checks that the cumulative columns are prefix sums of the per-step
    /// columns.
    pub fn check_prefix_sums(&self, tol: f64) -> std::result::Result<(), String> {
        let (mut realized, mut pseudo) = (0.0, 0.0);
        for (i, s) in self.steps.iter().enumerate() {
            realized += s.realized_regret;
            pseudo += s.pseudo_regret;
            if s.t != i + 1 {
                return Err(format!("step {i} has t = {}", s.t));
            }
            let bad = |a: f64, b: f64| (a - b).abs() > tol * (1.0 + a.abs());
            if bad(realized, s.cum_realized) || bad(pseudo, s.cum_pseudo) {
                return Err(format!("cumulative columns diverge at t = {}", s.t));
            }
        }
        Ok(())
    }

    pub fn final_cum_pseudo(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cum_pseudo)
    }
}

/// Runs one replication of `cfg`.
pub fn run_replication(cfg: &ExperimentConfig, rep: u64) -> Result<RegretTrace> {
    cfg.validate()?;
    let env = Environment::new(cfg.scenario.resolve()?)?;
    run_replication_in(&env, cfg, rep)
}

fn run_replication_in(env: &Environment, cfg: &ExperimentConfig, rep: u64) -> Result<RegretTrace> {
    let wrap = |e: Error| Error::Replication {
        rep,
        seed: cfg.base_seed,
        source: Box::new(e),
    };
    let spec = env.spec();
    let mut policy = cfg
        .policy
        .build(spec.num_arms(), spec.context_dim)
        .map_err(wrap)?;
    let mut env_rng = replication_rng(cfg.base_seed, rep, false);
    let mut policy_rng = replication_rng(cfg.base_seed, rep, true);
    let mut steps = Vec::with_capacity(cfg.horizon);
    let (mut cum_realized, mut cum_pseudo) = (0.0, 0.0);
    for t in 1..=cfg.horizon {
        let step = env.sample_step(&mut env_rng);
        let arm = policy
            .select_arm(&step.context, &mut policy_rng)
            .map_err(wrap)?
            .arm;
        let reward = step.rewards[arm];
        let diag = policy
            .update(arm, &step.context, reward, &mut policy_rng)
            .map_err(wrap)?;
        let realized_regret = step.rewards[step.optimal_arm] - reward;
        let pseudo_regret = step.expected[step.optimal_arm] - step.expected[arm];
        cum_realized += realized_regret;
        cum_pseudo += pseudo_regret;
        steps.push(StepRecord {
            t,
            arm,
            reward,
            realized_regret,
            pseudo_regret,
            cum_realized,
            cum_pseudo,
            sweeps_run: diag.sweeps_run,
        });
    }
    Ok(RegretTrace { rep, steps })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub t: usize,
    pub mean_cum_pseudo: f64,
    pub std_cum_pseudo: f64,
    pub mean_cum_realized: f64,
    pub std_cum_realized: f64,
}

/// Per-step mean and sample standard deviation of cumulative regret across
/// replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateTable {
    pub replications: usize,
    pub rows: Vec<AggregateRow>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

impl AggregateTable {
    /// Traces must share a horizon; they are combined in the given order.
    pub fn from_traces(traces: &[RegretTrace]) -> Result<Self> {
        let horizon = traces
            .first()
            .map(|t| t.steps.len())
            .ok_or_else(|| Error::InvalidConfig("no traces to aggregate".into()))?;
        if traces.iter().any(|t| t.steps.len() != horizon) {
            return Err(Error::InvalidConfig("traces have different horizons".into()));
        }
        let rows = (0..horizon)
            .map(|i| {
                let pseudo = traces.iter().map(move |tr| tr.steps[i].cum_pseudo);
                let realized = traces.iter().map(move |tr| tr.steps[i].cum_realized);
                let (mean_cum_pseudo, std_cum_pseudo) = mean_std(pseudo);
                let (mean_cum_realized, std_cum_realized) = mean_std(realized);
                AggregateRow {
                    t: traces[0].steps[i].t,
                    mean_cum_pseudo,
                    std_cum_pseudo,
                    mean_cum_realized,
                    std_cum_realized,
                }
            })
            .collect();
        Ok(Self {
            replications: traces.len(),
            rows,
        })
    }

    pub fn last(&self) -> &AggregateRow {
        self.rows.last().expect("aggregate has at least one row")
    }

    pub fn write_csv<W: Write>(&self, out: W, metadata: &[String]) -> Result<()> {
        let mut out = BufWriter::new(out);
        write_metadata(&mut out, metadata)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(AGGREGATE_HEADER)?;
        for r in &self.rows {
            w.write_record(&[
                r.t.to_string(),
                r.mean_cum_pseudo.to_string(),
                r.std_cum_pseudo.to_string(),
                r.mean_cum_realized.to_string(),
                r.std_cum_realized.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<aggregate csv>", e))?;
        Ok(())
    }
}

fn write_metadata<W: Write>(out: &mut W, metadata: &[String]) -> Result<()> {
    for line in metadata {
        writeln!(out, "# {line}").map_err(|e| Error::io("<csv metadata>", e))?;
    }
    Ok(())
}

pub fn write_traces_csv<W: Write>(out: W, traces: &[RegretTrace], metadata: &[String]) -> Result<()> {
    let mut out = BufWriter::new(out);
    write_metadata(&mut out, metadata)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for trace in traces {
        for s in &trace.steps {
            w.write_record(&[
                trace.rep.to_string(),
                s.t.to_string(),
                s.arm.to_string(),
                s.reward.to_string(),
                s.realized_regret.to_string(),
                s.pseudo_regret.to_string(),
                s.cum_realized.to_string(),
                s.cum_pseudo.to_string(),
                s.sweeps_run.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}

/// Reads a per-replication CSV back into traces, in file order.
pub fn read_traces_csv(path: impl AsRef<Path>) -> Result<Vec<RegretTrace>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(BufReader::new(file));
    let headers = reader.headers()?.clone();
    if headers.iter().ne(TRACE_HEADER.iter().copied()) {
        return Err(Error::MalformedLog {
            line: 1,
            reason: format!("{}: expected header {}", path.display(), TRACE_HEADER.join(",")),
        });
    }
    let mut traces: Vec<RegretTrace> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let field = |j: usize| -> Result<&str> { Ok(rec.get(j).unwrap_or_default()) };
        let bad = |what: &str| Error::MalformedLog {
            line: i + 2,
            reason: format!("{}: bad {what}", path.display()),
        };
        let rep: u64 = field(0)?.parse().map_err(|_| bad("rep"))?;
        let num = |j: usize, what: &str| -> Result<f64> { field(j)?.parse().map_err(|_| bad(what)) };
        let step = StepRecord {
            t: field(1)?.parse().map_err(|_| bad("t"))?,
            arm: field(2)?.parse().map_err(|_| bad("arm"))?,
            reward: num(3, "reward")?,
            realized_regret: num(4, "realized_regret")?,
            pseudo_regret: num(5, "pseudo_regret")?,
            cum_realized: num(6, "cum_realized")?,
            cum_pseudo: num(7, "cum_pseudo")?,
            sweeps_run: field(8)?.parse().map_err(|_| bad("sweeps_run"))?,
        };
        match traces.last_mut() {
            Some(tr) if tr.rep == rep && step.t == tr.steps.len() + 1 => tr.steps.push(step),
            _ => traces.push(RegretTrace {
                rep,
                steps: vec![step],
            }),
        }
    }
    Ok(traces)
}

/// Aggregate CSV path next to a per-replication CSV: `a.csv` -> `a.agg.csv`.
pub fn aggregate_path(trace_path: &Path) -> PathBuf {
    trace_path.with_extension("agg.csv")
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub traces: Vec<RegretTrace>,
    pub aggregate: AggregateTable,
    pub metadata: Vec<String>,
}

/// Runs all replications (on up to `cfg.parallelism` workers), aggregates
/// them in replication order and, when `cfg.output_path` is set, writes the
/// per-replication and aggregate CSVs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let spec = cfg.scenario.resolve()?;
    let env = Environment::new(spec.clone())?;
    let reps = cfg.replications as u64;
    let traces: Vec<RegretTrace> = if cfg.parallelism == 1 {
        (0..reps)
            .map(|rep| run_replication_in(&env, cfg, rep))
            .collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..reps)
                .into_par_iter()
                .map(|rep| run_replication_in(&env, cfg, rep))
                .collect::<Result<_>>()
        })?
    };
    for trace in &traces {
        trace
            .check_prefix_sums(1e-9)
            .map_err(|e| Error::InvalidConfig(format!("replication {}: {e}", trace.rep)))?;
    }
    let aggregate = AggregateTable::from_traces(&traces)?;
    let metadata = cfg.metadata(&spec);
    if let Some(path) = &cfg.output_path {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        write_traces_csv(file, &traces, &metadata)?;
        let agg = aggregate_path(path);
        let file = File::create(&agg).map_err(|e| Error::io(&agg, e))?;
        aggregate.write_csv(file, &metadata)?;
    }
    Ok(ExperimentOutput {
        traces,
        aggregate,
        metadata,
    })
}

/// Reads the `#` metadata lines at the top of a CSV.
pub fn read_metadata(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        match line.strip_prefix('#') {
            Some(rest) => out.push(rest.trim_start().to_string()),
            None => break,
        }
    }
    Ok(out)
}
