//! Ground-truth reward generators and the logged-data replayer.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conjugate::{dot, ContextVector};
use crate::error::{Error, Result};
use crate::policies::Policy;

/// Names accepted by [`builtin_scenario`].
pub const BUILTIN_SCENARIOS: [&str; 5] = ["A", "B", "C", "linear_gaussian", "C_misspec_pair"];

/// One arm's reward distribution: a finite mixture of Gaussian linear
/// regressions `sum_k weights[k] * N(x^T coefficients[k], variances[k])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureArmSpec {
    pub weights: Vec<f64>,
    pub coefficients: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

impl MixtureArmSpec {
    fn validate(&self, d: usize) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.coefficients.len() != k || self.variances.len() != k {
            return Err(Error::InvalidConfig(
                "arm needs equally long, non-empty weights/coefficients/variances".into(),
            ));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig("mixture weights must be nonnegative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        if self.variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidConfig("mixture variances must be positive".into()));
        }
        if let Some(c) = self.coefficients.iter().find(|c| c.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: c.len(),
            });
        }
        Ok(())
    }

    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    pub fn expected_reward(&self, x: &ContextVector) -> f64 {
        self.weights
            .iter()
            .zip(&self.coefficients)
            .map(|(w, c)| w * dot(c, x.as_slice()))
            .sum()
    }

    fn sample<R: Rng + ?Sized>(&self, x: &ContextVector, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self.weights.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        dot(&self.coefficients[k], x.as_slice()) + self.variances[k].sqrt() * z
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextSource {
    /// Independent U(0, 1) entries.
    Uniform01,
    /// Independent N(0, 1) entries.
    StandardNormal,
    /// Rows drawn uniformly with replacement from a CSV file with a header
    /// line and `context_dim` numeric columns.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub arms: Vec<MixtureArmSpec>,
    pub context_dim: usize,
    pub context_source: ContextSource,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.context_dim == 0 {
            return Err(Error::InvalidConfig("context_dim must be >= 1".into()));
        }
        if self.arms.is_empty() {
            return Err(Error::InvalidConfig("scenario needs at least one arm".into()));
        }
        self.arms.iter().try_for_each(|a| a.validate(self.context_dim))
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// True number of mixture components of each arm.
    pub fn components_per_arm(&self) -> Vec<usize> {
        self.arms.iter().map(MixtureArmSpec::num_components).collect()
    }

    /// `sum_k weight_k * x^T w_k` for `arm`.
    pub fn true_expected_reward(&self, arm: usize, x: &ContextVector) -> f64 {
        self.arms[arm].expected_reward(x)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(path, e))?;
        let spec: ScenarioSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn arm(weights: &[f64], coefficients: &[[f64; 2]], variances: &[f64]) -> MixtureArmSpec {
    MixtureArmSpec {
        weights: weights.to_vec(),
        coefficients: coefficients.iter().map(|c| c.to_vec()).collect(),
        variances: variances.to_vec(),
    }
}

/// Built-in two-dimensional scenarios with uniform contexts.
pub fn builtin_scenario(name: &str) -> Result<ScenarioSpec> {
    let arms = match name {
        "A" => vec![
            arm(&[0.5, 0.5], &[[1.0, 1.0], [2.0, 2.0]], &[1.0, 1.0]),
            arm(&[0.3, 0.7], &[[0.0, 0.0], [3.0, 3.0]], &[1.0, 1.0]),
        ],
        "B" => vec![
            arm(&[1.0], &[[1.0, 1.0]], &[1.0]),
            arm(&[0.5, 0.5], &[[1.0, 1.0], [2.0, 2.0]], &[1.0, 1.0]),
            arm(
                &[0.3, 0.6, 0.1],
                &[[0.0, 0.0], [3.0, 3.0], [4.0, 4.0]],
                &[1.0, 1.0, 1.0],
            ),
        ],
        "C" | "C_misspec_pair" => vec![
            arm(&[0.75, 0.25], &[[0.0, 0.0], [0.0, 0.0]], &[1.0, 10.0]),
            arm(&[0.75, 0.25], &[[2.0, 2.0], [2.0, 2.0]], &[1.0, 10.0]),
        ],
        "linear_gaussian" => vec![
            arm(&[1.0], &[[0.4, 0.4]], &[1.0]),
            arm(&[1.0], &[[0.8, 0.8]], &[1.0]),
        ],
        _ => {
            return Err(Error::UnknownScenario {
                name: name.to_string(),
                valid: BUILTIN_SCENARIOS.join(", "),
            })
        }
    };
    Ok(ScenarioSpec {
        arms,
        context_dim: 2,
        context_source: ContextSource::Uniform01,
    })
}

/// `spec.true_expected_reward(arm, x)`.
pub fn true_expected_reward(spec: &ScenarioSpec, arm: usize, x: &ContextVector) -> f64 {
    spec.true_expected_reward(arm, x)
}

/// One round of the environment: the context, a realized reward for every
/// arm, the true expected rewards and the optimal arm.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub context: ContextVector,
    pub rewards: Vec<f64>,
    pub expected: Vec<f64>,
    pub optimal_arm: usize,
}

#[derive(Clone, Debug)]
enum ContextSampler {
    Uniform01(usize),
    StandardNormal(usize),
    Rows(Vec<ContextVector>),
}

/// A validated scenario ready to generate rounds.
#[derive(Clone, Debug)]
pub struct Environment {
    spec: ScenarioSpec,
    sampler: ContextSampler,
}

impl Environment {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        let d = spec.context_dim;
        let sampler = match &spec.context_source {
            ContextSource::Uniform01 => ContextSampler::Uniform01(d),
            ContextSource::StandardNormal => ContextSampler::StandardNormal(d),
            ContextSource::File(path) => ContextSampler::Rows(read_context_rows(path, d)?),
        };
        Ok(Self { spec, sampler })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn sample_context<R: Rng + ?Sized>(&self, rng: &mut R) -> ContextVector {
        match &self.sampler {
            ContextSampler::Uniform01(d) => DVector::from_fn(*d, |_, _| rng.random::<f64>()),
            ContextSampler::StandardNormal(d) => {
                DVector::from_fn(*d, |_, _| rng.sample::<f64, _>(StandardNormal))
            }
            ContextSampler::Rows(rows) => rows[rng.random_range(0..rows.len())].clone(),
        }
    }

    /// One realized reward per arm at a fixed context.
    pub fn sample_rewards<R: Rng + ?Sized>(&self, x: &ContextVector, rng: &mut R) -> Vec<f64> {
        self.spec.arms.iter().map(|a| a.sample(x, rng)).collect()
    }

    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R) -> Step {
        let context = self.sample_context(rng);
        let rewards = self.sample_rewards(&context, rng);
        let expected: Vec<f64> = self
            .spec
            .arms
            .iter()
            .map(|a| a.expected_reward(&context))
            .collect();
        let mut optimal_arm = 0;
        for (i, e) in expected.iter().enumerate() {
            if *e > expected[optimal_arm] {
                optimal_arm = i;
            }
        }
        Step {
            context,
            rewards,
            expected,
            optimal_arm,
        }
    }
}

/// `Environment::new(spec)?.sample_step(rng)` without keeping the
/// environment around; file-backed context sources are re-read every call.
pub fn sample_step<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<Step> {
    Ok(Environment::new(spec.clone())?.sample_step(rng))
}

fn read_context_rows(path: &Path, d: usize) -> Result<Vec<ContextVector>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(file);
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != d {
            return Err(Error::MalformedLog {
                line: i + 2,
                reason: format!("expected {d} context columns, found {}", rec.len()),
            });
        }
        let values = rec
            .iter()
            .map(|f| parse_float(f, i + 2))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(DVector::from_vec(values));
    }
    if rows.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "context file {} has no rows",
            path.display()
        )));
    }
    Ok(rows)
}

fn parse_float(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::MalformedLog {
        line,
        reason: format!("`{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::MalformedLog {
            line,
            reason: format!("`{field}` is not finite"),
        });
    }
    Ok(v)
}

/// One logged bandit interaction.
#[derive(Clone, Debug, PartialEq)]
pub struct LoggedEvent {
    pub context: ContextVector,
    pub logged_arm: usize,
    pub reward: f64,
}

/// A log of bandit interactions with a declared arm count.
#[derive(Clone, Debug, PartialEq)]
pub struct LoggedDataset {
    pub num_arms: usize,
    pub context_dim: usize,
    pub events: Vec<LoggedEvent>,
}

impl LoggedDataset {
    /// Reads `context_0,...,context_{d-1},arm,reward` CSV. Without
    /// `num_arms`, the arm count is one more than the largest logged arm.
    pub fn read_csv(path: impl AsRef<Path>, num_arms: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, num_arms)
    }

    pub fn from_reader<R: Read>(reader: R, num_arms: Option<usize>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = reader.headers()?.clone();
        let n = headers.len();
        if n < 3 {
            return Err(Error::MalformedLog {
                line: 1,
                reason: "header needs at least one context column, `arm` and `reward`".into(),
            });
        }
        let d = n - 2;
        for (i, h) in headers.iter().enumerate() {
            let expected = match i {
                i if i < d => format!("context_{i}"),
                i if i == d => "arm".to_string(),
                _ => "reward".to_string(),
            };
            if h.trim() != expected {
                return Err(Error::MalformedLog {
                    line: 1,
                    reason: format!("column {i} is `{h}`, expected `{expected}`"),
                });
            }
        }
        let mut events = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(i + 2, |p| p.line() as usize);
            let context = (0..d)
                .map(|j| parse_float(&rec[j], line))
                .collect::<Result<Vec<f64>>>()?;
            let logged_arm: usize = rec[d].trim().parse().map_err(|_| Error::MalformedLog {
                line,
                reason: format!("arm `{}` is not a nonnegative integer", &rec[d]),
            })?;
            let reward = parse_float(&rec[d + 1], line)?;
            if let Some(a) = num_arms {
                if logged_arm >= a {
                    return Err(Error::MalformedLog {
                        line,
                        reason: format!("arm {logged_arm} out of range for {a} arms"),
                    });
                }
            }
            events.push(LoggedEvent {
                context: DVector::from_vec(context),
                logged_arm,
                reward,
            });
        }
        let num_arms = match num_arms {
            Some(a) => a,
            None => events.iter().map(|e| e.logged_arm + 1).max().unwrap_or(0),
        };
        Ok(Self {
            num_arms,
            context_dim: d,
            events,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.context_dim).map(|i| format!("context_{i}")).collect();
        header.push("arm".into());
        header.push("reward".into());
        w.write_record(&header)?;
        for e in &self.events {
            let mut rec: Vec<String> = e.context.iter().map(|v| v.to_string()).collect();
            rec.push(e.logged_arm.to_string());
            rec.push(e.reward.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Rejection-replay evaluation result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReplayOutcome {
    pub events_seen: usize,
    pub accepted_count: usize,
    pub click_sum: f64,
    /// Mean reward over accepted events; absent when nothing was accepted.
    pub ctr: Option<f64>,
}

/// Replays logged events through `policy`: an event counts (and is revealed
/// to the policy) only when the policy picks the logged arm.
pub fn replay<'a, I>(events: I, policy: &mut dyn Policy, rng: &mut dyn RngCore) -> Result<ReplayOutcome>
where
    I: IntoIterator<Item = &'a LoggedEvent>,
{
    let mut out = ReplayOutcome {
        events_seen: 0,
        accepted_count: 0,
        click_sum: 0.0,
        ctr: None,
    };
    for event in events {
        out.events_seen += 1;
        if event.logged_arm >= policy.num_arms() {
            return Err(Error::ArmOutOfRange {
                arm: event.logged_arm,
                num_arms: policy.num_arms(),
            });
        }
        let decision = policy.select_arm(&event.context, rng)?;
        if decision.arm == event.logged_arm {
            policy.update(decision.arm, &event.context, event.reward, rng)?;
            out.accepted_count += 1;
            out.click_sum += event.reward;
        }
    }
    if out.accepted_count > 0 {
        out.ctr = Some(out.click_sum / out.accepted_count as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::{PolicyKind, UniformRandom};
    use nalgebra::dvector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn builtin_shapes() {
        let a = builtin_scenario("A").unwrap();
        assert_eq!(a.num_arms(), 2);
        assert_eq!(a.arms[1].weights, vec![0.3, 0.7]);
        let b = builtin_scenario("B").unwrap();
        assert_eq!(b.arms[2].num_components(), 3);
        assert_eq!(b.arms[2].weights, vec![0.3, 0.6, 0.1]);
        assert_eq!(b.components_per_arm(), vec![1, 2, 3]);
        let c = builtin_scenario("C").unwrap();
        assert_eq!(c.arms[0].variances, vec![1.0, 10.0]);
        for name in BUILTIN_SCENARIOS {
            let s = builtin_scenario(name).unwrap();
            s.validate().unwrap();
            assert_eq!(s.context_source, ContextSource::Uniform01);
        }
    }

    #[test]
    fn unknown_scenario_lists_valid_names() {
        let err = builtin_scenario("Z").unwrap_err().to_string();
        assert!(err.contains("linear_gaussian") && err.contains("`Z`"));
    }

    #[test]
    fn expected_reward_examples() {
        let a = builtin_scenario("A").unwrap();
        let x = dvector![1.0, 1.0];
        assert!((true_expected_reward(&a, 1, &x) - 4.2).abs() < 1e-12);
        assert!((true_expected_reward(&a, 0, &x) - 3.0).abs() < 1e-12);
        for name in ["A", "B", "C"] {
            let s = builtin_scenario(name).unwrap();
            for arm in 0..s.num_arms() {
                assert_eq!(s.true_expected_reward(arm, &dvector![0.0, 0.0]), 0.0);
            }
        }
    }

    #[test]
    fn expected_reward_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for name in BUILTIN_SCENARIOS {
            let s = builtin_scenario(name).unwrap();
            for _ in 0..50 {
                let x1 = dvector![rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>()];
                let x2 = dvector![rng.random::<f64>(), rng.random::<f64>() * 3.0];
                let (a, b) = (rng.random::<f64>() * 5.0, -rng.random::<f64>());
                for arm in 0..s.num_arms() {
                    let lhs = s.true_expected_reward(arm, &(&x1 * a + &x2 * b));
                    let rhs = a * s.true_expected_reward(arm, &x1) + b * s.true_expected_reward(arm, &x2);
                    assert!((lhs - rhs).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn scenario_a_arm_one_optimal_for_positive_contexts() {
        let env = Environment::new(builtin_scenario("A").unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let step = env.sample_step(&mut rng);
            let s = step.context[0] + step.context[1];
            assert!(s > 0.0);
            assert_eq!(step.optimal_arm, 1);
            assert!(step.expected[1] > step.expected[0]);
        }
    }

    #[test]
    fn reward_means_match_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = dvector![0.7, 0.2];
        for name in ["A", "B", "C"] {
            let env = Environment::new(builtin_scenario(name).unwrap()).unwrap();
            let n = 100_000;
            let draws: Vec<Vec<f64>> = (0..n).map(|_| env.sample_rewards(&x, &mut rng)).collect();
            for arm in 0..env.spec().num_arms() {
                let v: Vec<f64> = draws.iter().map(|d| d[arm]).collect();
                let (mean, se) = mean_se(&v);
                let truth = env.spec().true_expected_reward(arm, &x);
                assert!((mean - truth).abs() < 4.0 * se, "{name}/{arm}: {mean} vs {truth}");
            }
        }
    }

    #[test]
    fn scenario_c_is_heavy_tailed() {
        let env = Environment::new(builtin_scenario("C").unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = dvector![0.5, 0.5];
        let v: Vec<f64> = (0..100_000).map(|_| env.sample_rewards(&x, &mut rng)[1]).collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let m2 = v.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        let m4 = v.iter().map(|y| (y - mean).powi(4)).sum::<f64>() / n;
        // a 0.75/0.25 mix of variances 1 and 10 has excess kurtosis ~3.2
        assert!(m4 / (m2 * m2) - 3.0 > 1.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let env = Environment::new(builtin_scenario("B").unwrap()).unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(1234);
            (0..50).map(|_| env.sample_step(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn builtins_round_trip_through_json() {
        for name in BUILTIN_SCENARIOS {
            let spec = builtin_scenario(name).unwrap();
            let text = serde_json::to_string(&spec).unwrap();
            let back: ScenarioSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
            assert_eq!(serde_json::to_string(&back).unwrap(), text);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = builtin_scenario("A").unwrap();
        s.arms[0].weights = vec![0.5, 0.6];
        assert!(s.validate().is_err());
        let mut s = builtin_scenario("A").unwrap();
        s.arms[1].variances[0] = 0.0;
        assert!(s.validate().is_err());
        let mut s = builtin_scenario("A").unwrap();
        s.arms[1].coefficients[0] = vec![1.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn file_context_source() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ctx.csv");
        std::fs::write(&path, "a,b\n0.1,0.2\n0.3,0.4\n").unwrap();
        let mut spec = builtin_scenario("A").unwrap();
        spec.context_source = ContextSource::File(path);
        let env = Environment::new(spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let x = env.sample_context(&mut rng);
            assert!(x == dvector![0.1, 0.2] || x == dvector![0.3, 0.4]);
        }
    }

    fn uniform_log(means: &[f64], n: usize, seed: u64) -> LoggedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let events = (0..n)
            .map(|_| {
                let arm = rng.random_range(0..means.len());
                let click = rng.random::<f64>() < means[arm];
                LoggedEvent {
                    context: dvector![rng.random::<f64>(), rng.random::<f64>()],
                    logged_arm: arm,
                    reward: if click { 1.0 } else { 0.0 },
                }
            })
            .collect();
        LoggedDataset {
            num_arms: means.len(),
            context_dim: 2,
            events,
        }
    }

    #[test]
    fn single_arm_log_accepts_everything() {
        let log = uniform_log(&[0.3], 500, 1);
        let mut policy = PolicyKind::nonparametric().build(1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = replay(&log.events, policy.as_mut(), &mut rng).unwrap();
        assert_eq!(out.accepted_count, 500);
        let mean = log.events.iter().map(|e| e.reward).sum::<f64>() / 500.0;
        assert!((out.ctr.unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn uniform_policy_acceptance_rate() {
        let arms = 4;
        let log = uniform_log(&[0.1, 0.2, 0.3, 0.4], 10_000, 3);
        let mut policy = UniformRandom::new(arms, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = replay(&log.events, &mut policy, &mut rng).unwrap();
        let p = 1.0 / arms as f64;
        let frac = out.accepted_count as f64 / out.events_seen as f64;
        let se = (p * (1.0 - p) / 10_000.0).sqrt();
        assert!((frac - p).abs() < 4.0 * se);
    }

    #[test]
    fn empty_acceptance_reports_no_ctr() {
        let mut policy = UniformRandom::new(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = replay(std::iter::empty(), &mut policy, &mut rng).unwrap();
        assert_eq!(out.accepted_count, 0);
        assert_eq!(out.ctr, None);
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let log = uniform_log(&[0.2, 0.7], 50, 5);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = LoggedDataset::from_reader(buf.as_slice(), Some(2)).unwrap();
        assert_eq!(back, log);

        let bad_header = "x0,x1,arm,reward\n0.1,0.2,0,1\n";
        assert!(LoggedDataset::from_reader(bad_header.as_bytes(), None).is_err());
        let bad_arm = "context_0,arm,reward\n0.1,3,1\n";
        let err = LoggedDataset::from_reader(bad_arm.as_bytes(), Some(2)).unwrap_err();
        assert!(matches!(err, Error::MalformedLog { line: 2, .. }), "{err}");
        let bad_num = "context_0,arm,reward\n0.1,0,abc\n";
        assert!(LoggedDataset::from_reader(bad_num.as_bytes(), None).is_err());
        let inferred = LoggedDataset::from_reader("context_0,arm,reward\n1,4,0\n".as_bytes(), None).unwrap();
        assert_eq!(inferred.num_arms, 5);
    }
}
