//! Bandit policies behind a single [`Policy`] interface.
//!
//! - [`MixtureThompson`] with a Pitman-Yor partition prior is the
//!   nonparametric Thompson sampler; with a finite symmetric Dirichlet it is
//!   the oracle baseline that knows the true number of components per arm.
//! - [`LinearGaussianThompson`] is the single-component conjugate case.
//! - [`UniformRandom`] ignores the context.

use nalgebra::DVector;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::conjugate::{
    matrix_from_rows, posterior_update, ComponentStats, ContextVector, NigHyper,
};
use crate::error::{Error, Result};
use crate::npmix::{ArmState, GibbsConfig, ObserveDiagnostics, PartitionPrior, PyConfig};
use crate::sampling::argmax_random_ties;

/// Arm choice together with the sampled expected reward of every arm.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub arm: usize,
    pub sampled_expected_rewards: Vec<f64>,
}

/// Work done by [`Policy::update`]; non-Gibbs policies report zero sweeps.
pub type UpdateDiagnostics = ObserveDiagnostics;

pub trait Policy: Send {
    fn num_arms(&self) -> usize;

    fn context_dim(&self) -> usize;

    /// Samples an expected reward for every arm and plays the argmax (ties
    /// broken uniformly at random).
    fn select_arm(&mut self, x: &ContextVector, rng: &mut dyn RngCore) -> Result<Decision>;

    /// Reveals the reward of the played arm.
    fn update(
        &mut self,
        arm: usize,
        x: &ContextVector,
        y: f64,
        rng: &mut dyn RngCore,
    ) -> Result<UpdateDiagnostics>;
}

fn check_context(expected: usize, x: &ContextVector) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

fn check_arm(arm: usize, num_arms: usize) -> Result<()> {
    if arm >= num_arms {
        return Err(Error::ArmOutOfRange { arm, num_arms });
    }
    Ok(())
}

fn decide(scores: Vec<f64>, rng: &mut dyn RngCore) -> Decision {
    Decision {
        arm: argmax_random_ties(&scores, rng),
        sampled_expected_rewards: scores,
    }
}

/// Prior hyperparameters as they appear in configuration files. Missing
/// fields fall back to `u = 0`, `V = I`, `alpha = beta = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    pub mean: Option<Vec<f64>>,
    pub covariance: Option<Vec<Vec<f64>>>,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            mean: None,
            covariance: None,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl PriorConfig {
    pub fn resolve(&self, d: usize) -> Result<NigHyper> {
        let u = match &self.mean {
            Some(m) if m.len() != d => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: m.len(),
                })
            }
            Some(m) => DVector::from_column_slice(m),
            None => DVector::zeros(d),
        };
        let v = match &self.covariance {
            Some(rows) => matrix_from_rows(rows, d)?,
            None => nalgebra::DMatrix::identity(d, d),
        };
        NigHyper::new(u, v, self.alpha, self.beta)
    }
}

fn default_oracle_concentration() -> f64 {
    0.1
}

/// Serializable policy description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    Nonparametric {
        #[serde(default)]
        py: PyConfig,
        #[serde(default)]
        gibbs: GibbsConfig,
        #[serde(default)]
        prior: PriorConfig,
    },
    OracleMixture {
        /// Components per arm; a single entry applies to every arm.
        components: Vec<usize>,
        #[serde(default = "default_oracle_concentration")]
        concentration: f64,
        #[serde(default)]
        gibbs: GibbsConfig,
        #[serde(default)]
        prior: PriorConfig,
    },
    LinearGaussian {
        #[serde(default)]
        prior: PriorConfig,
    },
    UniformRandom,
}

impl PolicyKind {
    pub fn nonparametric() -> Self {
        PolicyKind::Nonparametric {
            py: PyConfig::default(),
            gibbs: GibbsConfig::default(),
            prior: PriorConfig::default(),
        }
    }

    pub fn oracle(components: Vec<usize>) -> Self {
        PolicyKind::OracleMixture {
            components,
            concentration: default_oracle_concentration(),
            gibbs: GibbsConfig::default(),
            prior: PriorConfig::default(),
        }
    }

    pub fn linear_gaussian() -> Self {
        PolicyKind::LinearGaussian {
            prior: PriorConfig::default(),
        }
    }

    /// Short name used in CLI flags and output metadata.
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Nonparametric { .. } => "nonparametric",
            PolicyKind::OracleMixture { .. } => "oracle",
            PolicyKind::LinearGaussian { .. } => "linear",
            PolicyKind::UniformRandom => "uniform",
        }
    }

    pub fn build(&self, num_arms: usize, context_dim: usize) -> Result<Box<dyn Policy>> {
        if num_arms == 0 {
            return Err(Error::InvalidConfig("at least one arm is required".into()));
        }
        Ok(match self {
            PolicyKind::Nonparametric { py, gibbs, prior } => Box::new(
                MixtureThompson::nonparametric(num_arms, prior.resolve(context_dim)?, *py, *gibbs)?,
            ),
            PolicyKind::OracleMixture {
                components,
                concentration,
                gibbs,
                prior,
            } => {
                let per_arm = match components.len() {
                    1 => vec![components[0]; num_arms],
                    n if n == num_arms => components.clone(),
                    n => {
                        return Err(Error::InvalidConfig(format!(
                            "oracle needs 1 or {num_arms} component counts, got {n}"
                        )))
                    }
                };
                Box::new(MixtureThompson::oracle(
                    &per_arm,
                    prior.resolve(context_dim)?,
                    *concentration,
                    *gibbs,
                )?)
            }
            PolicyKind::LinearGaussian { prior } => Box::new(LinearGaussianThompson::new(
                num_arms,
                prior.resolve(context_dim)?,
            )),
            PolicyKind::UniformRandom => Box::new(UniformRandom::new(num_arms, context_dim)),
        })
    }
}

/// Thompson sampling over per-arm Gaussian linear-regression mixtures.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MixtureThompson {
    arms: Vec<ArmState>,
    gibbs: GibbsConfig,
}

impl MixtureThompson {
    pub fn nonparametric(
        num_arms: usize,
        prior: NigHyper,
        py: PyConfig,
        gibbs: GibbsConfig,
    ) -> Result<Self> {
        gibbs.validate()?;
        let arms = (0..num_arms)
            .map(|_| ArmState::pitman_yor(prior.clone(), py))
            .collect::<Result<_>>()?;
        Ok(Self { arms, gibbs })
    }

    /// Finite-K mixtures with a symmetric Dirichlet(`concentration / K`)
    /// prior on the weights of each arm.
    pub fn oracle(
        components_per_arm: &[usize],
        prior: NigHyper,
        concentration: f64,
        gibbs: GibbsConfig,
    ) -> Result<Self> {
        gibbs.validate()?;
        let arms = components_per_arm
            .iter()
            .map(|k| ArmState::finite(prior.clone(), *k, concentration))
            .collect::<Result<_>>()?;
        Ok(Self { arms, gibbs })
    }

    pub fn from_arms(arms: Vec<ArmState>, gibbs: GibbsConfig) -> Result<Self> {
        gibbs.validate()?;
        if arms.is_empty() {
            return Err(Error::InvalidConfig("at least one arm is required".into()));
        }
        if arms.iter().any(|a| a.dim() != arms[0].dim()) {
            return Err(Error::InvalidConfig("arms disagree on context dimension".into()));
        }
        Ok(Self { arms, gibbs })
    }

    pub fn arms(&self) -> &[ArmState] {
        &self.arms
    }

    pub fn gibbs(&self) -> &GibbsConfig {
        &self.gibbs
    }

    /// Sampled mixture mean at `x`: component draws from their posteriors,
    /// the prospective new component from the prior, weighted by the
    /// partition prior's predictive weights.
    fn sampled_expected_reward(arm: &ArmState, x: &ContextVector, rng: &mut dyn RngCore) -> f64 {
        let counts = arm.counts();
        let (weights, new_weight) = arm.partition().expected_weights(&counts);
        let mut mu = 0.0;
        for (w, comp) in weights.iter().zip(arm.components()) {
            mu += w * comp.posterior().sample_params(rng).mean_at(x);
        }
        if let Some(w) = new_weight {
            mu += w * arm.prior().sample_params(rng).mean_at(x);
        }
        mu
    }
}

impl Policy for MixtureThompson {
    fn num_arms(&self) -> usize {
        self.arms.len()
    }

    fn context_dim(&self) -> usize {
        self.arms[0].dim()
    }

    fn select_arm(&mut self, x: &ContextVector, rng: &mut dyn RngCore) -> Result<Decision> {
        check_context(self.context_dim(), x)?;
        let scores = self
            .arms
            .iter()
            .map(|arm| Self::sampled_expected_reward(arm, x, rng))
            .collect();
        Ok(decide(scores, rng))
    }

    fn update(
        &mut self,
        arm: usize,
        x: &ContextVector,
        y: f64,
        rng: &mut dyn RngCore,
    ) -> Result<UpdateDiagnostics> {
        check_arm(arm, self.arms.len())?;
        check_context(self.context_dim(), x)?;
        self.arms[arm].observe(x.clone(), y, &self.gibbs, rng)
    }
}

/// Unnormalized log assignment weights of a finite-K arm: entry `k` is
/// `ln(n_k + gamma/K) + ln p(y | x, posterior_k)`. Empty components stay
/// available.
pub fn oracle_assignment_log_weights(state: &ArmState, x: &ContextVector, y: f64) -> Vec<f64> {
    assert!(
        matches!(state.partition(), PartitionPrior::FiniteDirichlet { .. }),
        "oracle weights need a finite mixture"
    );
    state.assignment_log_weights(x, y)
}

/// Conjugate Thompson sampling for a single Gaussian linear regression per
/// arm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearGaussianThompson {
    priors: Vec<NigHyper>,
    stats: Vec<ComponentStats>,
    posteriors: Vec<NigHyper>,
}

impl LinearGaussianThompson {
    pub fn new(num_arms: usize, prior: NigHyper) -> Self {
        Self::with_priors(vec![prior; num_arms])
    }

    /// One prior per arm; all must share the context dimension.
    pub fn with_priors(priors: Vec<NigHyper>) -> Self {
        assert!(!priors.is_empty(), "at least one arm");
        let d = priors[0].dim();
        assert!(priors.iter().all(|p| p.dim() == d), "mixed context dimensions");
        Self {
            stats: vec![ComponentStats::empty(d); priors.len()],
            posteriors: priors.clone(),
            priors,
        }
    }

    pub fn posterior(&self, arm: usize) -> &NigHyper {
        &self.posteriors[arm]
    }

    pub fn stats(&self, arm: usize) -> &ComponentStats {
        &self.stats[arm]
    }
}

impl Policy for LinearGaussianThompson {
    fn num_arms(&self) -> usize {
        self.priors.len()
    }

    fn context_dim(&self) -> usize {
        self.priors[0].dim()
    }

    fn select_arm(&mut self, x: &ContextVector, rng: &mut dyn RngCore) -> Result<Decision> {
        check_context(self.context_dim(), x)?;
        let scores = self
            .posteriors
            .iter()
            .map(|p| p.sample_params(rng).mean_at(x))
            .collect();
        Ok(decide(scores, rng))
    }

    fn update(
        &mut self,
        arm: usize,
        x: &ContextVector,
        y: f64,
        _rng: &mut dyn RngCore,
    ) -> Result<UpdateDiagnostics> {
        check_arm(arm, self.num_arms())?;
        check_context(self.context_dim(), x)?;
        self.stats[arm].add(x, y)?;
        self.posteriors[arm] = posterior_update(&self.priors[arm], &self.stats[arm])?;
        Ok(UpdateDiagnostics {
            sweeps_run: 0,
            converged: true,
        })
    }
}

/// Plays every arm with equal probability.
#[derive(Clone, Debug)]
pub struct UniformRandom {
    num_arms: usize,
    context_dim: usize,
}

impl UniformRandom {
    pub fn new(num_arms: usize, context_dim: usize) -> Self {
        Self {
            num_arms,
            context_dim,
        }
    }
}

impl Policy for UniformRandom {
    fn num_arms(&self) -> usize {
        self.num_arms
    }

    fn context_dim(&self) -> usize {
        self.context_dim
    }

    fn select_arm(&mut self, x: &ContextVector, rng: &mut dyn RngCore) -> Result<Decision> {
        check_context(self.context_dim, x)?;
        // all-equal scores: the random tie-break is the uniform draw
        Ok(decide(vec![0.0; self.num_arms], rng))
    }

    fn update(
        &mut self,
        arm: usize,
        _x: &ContextVector,
        _y: f64,
        _rng: &mut dyn RngCore,
    ) -> Result<UpdateDiagnostics> {
        check_arm(arm, self.num_arms)?;
        Ok(UpdateDiagnostics {
            sweeps_run: 0,
            converged: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dvector, DMatrix};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, StudentsT};

    fn normalized(mut w: Vec<f64>) -> Vec<f64> {
        crate::sampling::normalize_log_weights(&mut w);
        w
    }

    #[test]
    fn empty_arms_are_chosen_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let arms = 4;
        let mut policy = PolicyKind::nonparametric().build(arms, 2).unwrap();
        let x = dvector![0.5, 0.5];
        let n = 10_000;
        let mut counts = vec![0usize; arms];
        for _ in 0..n {
            counts[policy.select_arm(&x, &mut rng).unwrap().arm] += 1;
        }
        let expected = n as f64 / arms as f64;
        let chi2: f64 = counts
            .iter()
            .map(|c| (*c as f64 - expected).powi(2) / expected)
            .sum();
        let p = 1.0 - ChiSquared::new((arms - 1) as f64).unwrap().cdf(chi2);
        assert!(p > 0.001, "chi2 = {chi2}, p = {p}, counts {counts:?}");
    }

    #[test]
    fn tight_high_arm_wins() {
        let tight = |w: f64| {
            NigHyper::new(dvector![w, w], DMatrix::identity(2, 2) * 1e-10, 1e6, 1e-6).unwrap()
        };
        let mut policy = LinearGaussianThompson::with_priors(vec![tight(0.0), tight(10.0), tight(0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = dvector![1.0, 1.0];
        for _ in 0..1000 {
            assert_eq!(policy.select_arm(&x, &mut rng).unwrap().arm, 1);
        }
    }

    #[test]
    fn update_touches_only_the_played_arm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut policy =
            MixtureThompson::nonparametric(3, NigHyper::standard(2), PyConfig::default(), GibbsConfig::default())
                .unwrap();
        for t in 0..30 {
            let x = dvector![rng.random::<f64>(), rng.random::<f64>()];
            policy.update(t % 3, &x, (t as f64).sin() * 3.0, &mut rng).unwrap();
        }
        let snapshot = |p: &MixtureThompson| -> Vec<String> {
            p.arms().iter().map(|a| serde_json::to_string(a).unwrap()).collect()
        };
        let before = snapshot(&policy);
        let d = policy.update(1, &dvector![0.3, 0.3], 2.0, &mut rng).unwrap();
        let after = snapshot(&policy);
        assert_eq!(before[0], after[0]);
        assert_eq!(before[2], after[2]);
        assert_ne!(before[1], after[1]);
        assert!(d.sweeps_run >= 1 && d.sweeps_run <= policy.gibbs().max_iters);
    }

    #[test]
    fn nonparametric_sweeps_bounded_by_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let gibbs = GibbsConfig::new(1e-12, 3).unwrap();
        let mut policy =
            MixtureThompson::nonparametric(2, NigHyper::standard(2), PyConfig::default(), gibbs).unwrap();
        for t in 0..50 {
            let x = dvector![rng.random::<f64>(), rng.random::<f64>()];
            let y = if t % 2 == 0 { 5.0 } else { -5.0 } + rng.random::<f64>();
            let d = policy.update(t % 2, &x, y, &mut rng).unwrap();
            assert!(d.sweeps_run <= 3);
        }
    }

    #[test]
    fn linear_gaussian_matches_batch_posterior() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let prior = NigHyper::new(dvector![0.2, -0.1], DMatrix::identity(2, 2) * 2.0, 2.0, 0.5).unwrap();
        let mut policy = LinearGaussianThompson::new(2, prior.clone());
        let mut obs = Vec::new();
        for _ in 0..40 {
            let x = dvector![rng.random::<f64>(), rng.random::<f64>()];
            let y = 3.0 * x[0] - x[1] + rng.random::<f64>();
            policy.update(0, &x, y, &mut rng).unwrap();
            obs.push((x, y));
        }
        let batch = ComponentStats::from_observations(2, obs.iter().map(|(x, y)| (x, *y)));
        let expected = posterior_update(&prior, &batch).unwrap();
        let got = policy.posterior(0);
        assert!((got.mean() - expected.mean()).amax() < 1e-10);
        assert!((got.precision() - expected.precision()).amax() < 1e-10);
        assert!((got.beta() - expected.beta()).abs() < 1e-9);
        assert_eq!(got.alpha(), expected.alpha());
        assert_eq!(policy.posterior(1), &prior);
    }

    #[test]
    fn oracle_weight_examples() {
        let x = dvector![0.5, 0.5];
        let empty = ArmState::finite(NigHyper::standard(2), 2, 0.1).unwrap();
        let w = normalized(oracle_assignment_log_weights(&empty, &x, 1.0));
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut single = ArmState::finite(NigHyper::standard(2), 1, 0.1).unwrap();
        single.observe(x.clone(), 3.0, &GibbsConfig::default(), &mut rng).unwrap();
        assert_eq!(normalized(oracle_assignment_log_weights(&single, &x, -2.0)), vec![1.0]);

        let prior = PartitionPrior::FiniteDirichlet {
            components: 2,
            concentration: 0.1,
        };
        let w = normalized(prior.log_prior_weights(&[3, 1]));
        assert!((w[0] - 3.05 / 4.1).abs() < 1e-15);
        assert!((w[1] - 1.05 / 4.1).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for kind in [
            PolicyKind::nonparametric(),
            PolicyKind::oracle(vec![2]),
            PolicyKind::linear_gaussian(),
            PolicyKind::UniformRandom,
        ] {
            let mut p = kind.build(2, 2).unwrap();
            assert!(matches!(
                p.select_arm(&dvector![1.0, 2.0, 3.0], &mut rng),
                Err(Error::DimensionMismatch { .. })
            ));
        }
    }

    #[test]
    fn oracle_component_list_must_fit_arms() {
        assert!(PolicyKind::oracle(vec![1, 2, 3]).build(2, 2).is_err());
        assert!(PolicyKind::oracle(vec![1, 2]).build(2, 2).is_ok());
    }

    #[test]
    fn policy_kind_json_defaults() {
        let kind: PolicyKind = serde_json::from_str(r#"{"kind":"nonparametric"}"#).unwrap();
        assert_eq!(kind, PolicyKind::nonparametric());
        let kind: PolicyKind =
            serde_json::from_str(r#"{"kind":"oracle_mixture","components":[2,3]}"#).unwrap();
        assert_eq!(kind, PolicyKind::oracle(vec![2, 3]));
    }

    /// P(arm 1 sampled mean > arm 0 sampled mean) by quadrature over the two
    /// independent Student-t marginals of x^T w.
    fn prob_second_wins(a: &NigHyper, b: &NigHyper, x: &ContextVector) -> f64 {
        let marginal = |h: &NigHyper| {
            let loc = h.mean().dot(x);
            let scale = (h.beta() / h.alpha() * (x.transpose() * h.covariance() * x)[(0, 0)]).sqrt();
            StudentsT::new(loc, scale, 2.0 * h.alpha()).unwrap()
        };
        let (ta, tb) = (marginal(a), marginal(b));
        // substitute t = loc + s * tan(theta) to integrate over the real line
        let (loc, s) = (ta.location(), ta.scale());
        let n = 200_000;
        let h = std::f64::consts::PI / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let theta = -std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * h;
            let t = loc + s * theta.tan();
            let jac = s / theta.cos().powi(2);
            sum += ta.pdf(t) * (1.0 - tb.cdf(t)) * jac;
        }
        sum * h
    }

    #[test]
    fn choice_frequency_matches_posterior_probability() {
        let a = NigHyper::new(dvector![0.5, 0.2], DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]), 3.0, 2.0).unwrap();
        let b = NigHyper::new(dvector![0.3, 0.6], DMatrix::identity(2, 2) * 0.4, 2.5, 1.5).unwrap();
        let x = dvector![0.8, 0.6];
        let p = prob_second_wins(&a, &b, &x);
        let mut policy = LinearGaussianThompson::with_priors(vec![a, b]);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| policy.select_arm(&x, &mut rng).unwrap().arm == 1)
            .count();
        let freq = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "freq {freq} vs p {p} (se {se})");
    }

    #[test]
    fn single_component_nonparametric_agrees_with_linear_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let py = PyConfig::new(0.0, 1e-9).unwrap();
        let mut np =
            MixtureThompson::nonparametric(2, NigHyper::standard(2), py, GibbsConfig::default()).unwrap();
        let mut lg = LinearGaussianThompson::new(2, NigHyper::standard(2));
        for t in 0..40 {
            let arm = t % 2;
            let x = dvector![rng.random::<f64>(), rng.random::<f64>()];
            let y = if arm == 0 { x[0] + x[1] } else { 1.2 * (x[0] + x[1]) } + rng.random::<f64>() - 0.5;
            np.update(arm, &x, y, &mut rng).unwrap();
            lg.update(arm, &x, y, &mut rng).unwrap();
        }
        assert!(np.arms().iter().all(|a| a.components().len() == 1));
        let x = dvector![0.6, 0.7];
        let n = 40_000;
        let freq = |p: &mut dyn Policy, rng: &mut ChaCha8Rng| {
            (0..n).filter(|_| p.select_arm(&x, rng).unwrap().arm == 1).count() as f64 / n as f64
        };
        let f_np = freq(&mut np, &mut rng);
        let f_lg = freq(&mut lg, &mut rng);
        let se = (f_np * (1.0 - f_np) / n as f64 + f_lg * (1.0 - f_lg) / n as f64).sqrt();
        assert!((f_np - f_lg).abs() < 3.0 * se, "np {f_np} lg {f_lg} se {se}");
    }

    proptest! {
        #[test]
        fn argmax_is_shift_invariant(values in prop::collection::vec(-5i32..5, 1..8), shift in -1000.0f64..1000.0, seed in any::<u64>()) {
            let base: Vec<f64> = values.iter().map(|v| *v as f64).collect();
            let shifted: Vec<f64> = base.iter().map(|v| v + shift.round()).collect();
            let mut r1 = ChaCha8Rng::seed_from_u64(seed);
            let mut r2 = ChaCha8Rng::seed_from_u64(seed);
            prop_assert_eq!(argmax_random_ties(&base, &mut r1), argmax_random_ties(&shifted, &mut r2));
        }
    }
}
