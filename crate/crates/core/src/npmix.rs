//! Per-arm mixture state and the warm-started collapsed Gibbs sampler.
//!
//! An [`ArmState`] holds one arm's observation history, the assignment of
//! every observation to a mixture component, and each component's sufficient
//! statistics and NIG posterior. Component parameters are integrated out, so
//! the sampler only moves the assignments.
//!
//! Two partition priors share the machinery: the Pitman-Yor process (open
//! ended, empty components are deleted) and a symmetric finite Dirichlet with
//! a fixed number of components (used by the oracle baseline).

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::conjugate::{log_evidence, posterior_update, ComponentStats, ContextVector, NigHyper};
use crate::error::{Error, Result};
use crate::sampling::sample_log_weights;

/// Pitman-Yor discount `d` and concentration `gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PyConfig {
    pub discount: f64,
    pub concentration: f64,
}

impl PyConfig {
    pub fn new(discount: f64, concentration: f64) -> Result<Self> {
        let cfg = Self {
            discount,
            concentration,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::InvalidConfig(format!(
                "discount must lie in [0, 1), got {}",
                self.discount
            )));
        }
        if !(self.concentration.is_finite() && self.concentration > -self.discount) {
            return Err(Error::InvalidConfig(format!(
                "concentration must exceed -discount, got {}",
                self.concentration
            )));
        }
        Ok(())
    }
}

impl Default for PyConfig {
    fn default() -> Self {
        Self {
            discount: 0.0,
            concentration: 0.1,
        }
    }
}

/// Stopping rule for the Gibbs sweeps run after each observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    /// Relative change of the joint log-likelihood below which the chain is
    /// considered converged.
    pub epsilon: f64,
    pub max_iters: usize,
}

impl GibbsConfig {
    pub fn new(epsilon: f64, max_iters: usize) -> Result<Self> {
        let cfg = Self { epsilon, max_iters };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gibbs epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("gibbs max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            max_iters: 10,
        }
    }
}

/// Prior over the partition of an arm's observations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionPrior {
    PitmanYor(PyConfig),
    /// Symmetric Dirichlet(`concentration / components`) over a fixed number
    /// of components.
    FiniteDirichlet { components: usize, concentration: f64 },
}

impl PartitionPrior {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PartitionPrior::PitmanYor(py) => py.validate(),
            PartitionPrior::FiniteDirichlet {
                components,
                concentration,
            } => {
                if components == 0 {
                    return Err(Error::InvalidConfig(
                        "finite mixture needs at least one component".into(),
                    ));
                }
                if !(concentration.is_finite() && concentration > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "dirichlet concentration must be > 0, got {concentration}"
                    )));
                }
                Ok(())
            }
        }
    }

    fn is_open(&self) -> bool {
        matches!(self, PartitionPrior::PitmanYor(_))
    }

    /// Unnormalized log prior weights of each existing component followed,
    /// for the open-ended prior, by the new-component weight. The common
    /// `1 / (n + gamma)` factor is omitted.
    fn fill_log_prior_weights(&self, counts: impl Iterator<Item = usize>, out: &mut Vec<f64>) {
        out.clear();
        match *self {
            PartitionPrior::PitmanYor(py) => {
                out.extend(counts.map(|n| (n as f64 - py.discount).ln()));
                let k = out.len() as f64;
                out.push((py.concentration + k * py.discount).ln());
            }
            PartitionPrior::FiniteDirichlet {
                components,
                concentration,
            } => {
                let a = concentration / components as f64;
                out.extend(counts.map(|n| (n as f64 + a).ln()));
            }
        }
    }

    /// Allocating form of the prior assignment weights for block sizes
    /// `counts`.
    pub fn log_prior_weights(&self, counts: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(counts.len() + 1);
        self.fill_log_prior_weights(counts.iter().copied(), &mut out);
        out
    }

    /// Predictive mixture weights `(existing, new)`; `new` is absent for the
    /// finite prior. The weights sum to one.
    pub fn expected_weights(&self, counts: &[usize]) -> (Vec<f64>, Option<f64>) {
        let n: usize = counts.iter().sum();
        let nf = n as f64;
        match *self {
            PartitionPrior::PitmanYor(py) => {
                if n == 0 {
                    return (vec![0.0; counts.len()], Some(1.0));
                }
                let denom = nf + py.concentration;
                let k = counts.len() as f64;
                (
                    counts
                        .iter()
                        .map(|c| (*c as f64 - py.discount) / denom)
                        .collect(),
                    Some((py.concentration + k * py.discount) / denom),
                )
            }
            PartitionPrior::FiniteDirichlet {
                components,
                concentration,
            } => {
                let a = concentration / components as f64;
                let denom = nf + concentration;
                (counts.iter().map(|c| (*c as f64 + a) / denom).collect(), None)
            }
        }
    }

    /// Log probability of the assignment configuration with the given block
    /// sizes: the product of sequential predictive weights.
    pub fn log_partition_prob(&self, counts: &[usize]) -> f64 {
        let n: usize = counts.iter().sum();
        if n == 0 {
            return 0.0;
        }
        match *self {
            PartitionPrior::PitmanYor(py) => {
                let (d, g) = (py.discount, py.concentration);
                let occupied: Vec<usize> = counts.iter().copied().filter(|c| *c > 0).collect();
                let k = occupied.len();
                let new_tables: f64 = (1..k).map(|i| (g + i as f64 * d).ln()).sum();
                let seats: f64 = occupied
                    .iter()
                    .map(|c| ln_gamma(*c as f64 - d) - ln_gamma(1.0 - d))
                    .sum();
                new_tables + seats - (ln_gamma(g + n as f64) - ln_gamma(g + 1.0))
            }
            PartitionPrior::FiniteDirichlet {
                components,
                concentration,
            } => {
                let a = concentration / components as f64;
                let blocks: f64 = counts
                    .iter()
                    .map(|c| ln_gamma(*c as f64 + a) - ln_gamma(a))
                    .sum();
                ln_gamma(concentration) - ln_gamma(n as f64 + concentration) + blocks
            }
        }
    }
}

/// One mixture component: sufficient statistics plus the posterior they imply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    stats: ComponentStats,
    posterior: NigHyper,
    log_evidence: f64,
}

impl Component {
    fn empty(prior: &NigHyper) -> Self {
        Self {
            stats: ComponentStats::empty(prior.dim()),
            posterior: prior.clone(),
            log_evidence: 0.0,
        }
    }

    fn from_stats(prior: &NigHyper, stats: ComponentStats) -> Result<Self> {
        if stats.count() == 0 {
            return Ok(Self::empty(prior));
        }
        let posterior = posterior_update(prior, &stats)?;
        let log_evidence = log_evidence(prior, &posterior, stats.count());
        Ok(Self {
            stats,
            posterior,
            log_evidence,
        })
    }

    pub fn stats(&self) -> &ComponentStats {
        &self.stats
    }

    pub fn posterior(&self) -> &NigHyper {
        &self.posterior
    }

    pub fn count(&self) -> usize {
        self.stats.count()
    }

    /// Log marginal likelihood of the observations assigned here.
    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }
}

/// Outcome of [`ArmState::observe`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ObserveDiagnostics {
    pub sweeps_run: usize,
    pub converged: bool,
}

/// One arm's mixture model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    prior: NigHyper,
    partition: PartitionPrior,
    history: Vec<(ContextVector, f64)>,
    assignments: Vec<usize>,
    components: Vec<Component>,
    #[serde(skip)]
    scratch: Vec<f64>,
}

impl ArmState {
    pub fn new(prior: NigHyper, partition: PartitionPrior) -> Result<Self> {
        partition.validate()?;
        let components = match partition {
            PartitionPrior::PitmanYor(_) => Vec::new(),
            PartitionPrior::FiniteDirichlet { components, .. } => {
                vec![Component::empty(&prior); components]
            }
        };
        Ok(Self {
            prior,
            partition,
            history: Vec::new(),
            assignments: Vec::new(),
            components,
            scratch: Vec::new(),
        })
    }

    pub fn pitman_yor(prior: NigHyper, py: PyConfig) -> Result<Self> {
        Self::new(prior, PartitionPrior::PitmanYor(py))
    }

    pub fn finite(prior: NigHyper, components: usize, concentration: f64) -> Result<Self> {
        Self::new(
            prior,
            PartitionPrior::FiniteDirichlet {
                components,
                concentration,
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn prior(&self) -> &NigHyper {
        &self.prior
    }

    pub fn partition(&self) -> &PartitionPrior {
        &self.partition
    }

    pub fn history(&self) -> &[(ContextVector, f64)] {
        &self.history
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.components.iter().map(Component::count).collect()
    }

    /// Number of components holding at least one observation.
    pub fn occupied_components(&self) -> usize {
        self.components.iter().filter(|c| c.count() > 0).count()
    }

    fn check_dim(&self, x: &ContextVector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Unnormalized log assignment weights of `(x, y)` against the current
    /// components (plus the new-component entry for the open-ended prior).
    pub fn assignment_log_weights(&self, x: &ContextVector, y: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.components.len() + 1);
        self.fill_log_weights(x, y, &mut out);
        out
    }

    fn fill_log_weights(&self, x: &ContextVector, y: f64, out: &mut Vec<f64>) {
        self.partition
            .fill_log_prior_weights(self.components.iter().map(Component::count), out);
        for (w, c) in out.iter_mut().zip(&self.components) {
            *w += c.posterior.log_predictive(x, y);
        }
        if self.partition.is_open() {
            let last = out.len() - 1;
            out[last] += self.prior.log_predictive(x, y);
        }
    }

    fn draw_component<R: Rng + ?Sized>(&mut self, x: &ContextVector, y: f64, rng: &mut R) -> usize {
        let mut buf = std::mem::take(&mut self.scratch);
        self.fill_log_weights(x, y, &mut buf);
        let k = sample_log_weights(&mut buf, rng);
        self.scratch = buf;
        k
    }

    /// Log joint density of the observations and the current assignments.
    pub fn joint_log_likelihood(&self) -> f64 {
        let emissions: f64 = self.components.iter().map(Component::log_evidence).sum();
        emissions + self.partition.log_partition_prob(&self.counts())
    }

    /// One systematic-scan Gibbs pass over the history, oldest first.
    pub fn gibbs_sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        for i in 0..self.history.len() {
            self.reassign(i, rng)?;
        }
        Ok(())
    }

    fn reassign<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> Result<()> {
        let old = self.assignments[i];
        let (x, y) = {
            let (x, y) = &self.history[i];
            (x.clone(), *y)
        };
        let mut stats = self.components[old].stats.clone();
        stats.remove(&x, y)?;
        let removed = if stats.count() == 0 {
            Component::empty(&self.prior)
        } else {
            Component::from_stats(&self.prior, stats)?
        };
        let saved = std::mem::replace(&mut self.components[old], removed);

        // the open-ended prior drops empty components; labels are compacted
        // by moving the last component into the hole
        let deleted = self.partition.is_open() && self.components[old].count() == 0;
        if deleted {
            let last = self.components.len() - 1;
            self.components.swap_remove(old);
            if last != old {
                for z in self.assignments.iter_mut() {
                    if *z == last {
                        *z = old;
                    }
                }
            }
        }

        let k = self.draw_component(&x, y, rng);
        let back_home = if deleted {
            k == self.components.len()
        } else {
            k == old
        };
        if back_home {
            // restoring the saved component avoids add/remove round-off
            if deleted {
                self.components.push(saved);
            } else {
                self.components[old] = saved;
            }
        } else {
            if k == self.components.len() {
                self.components.push(Component::empty(&self.prior));
            }
            let mut stats = self.components[k].stats.clone();
            stats.add(&x, y)?;
            self.components[k] = Component::from_stats(&self.prior, stats)?;
        }
        self.assignments[i] = k;
        Ok(())
    }

    /// Appends `(x, y)`, seeds its assignment with one conditional draw and
    /// runs Gibbs sweeps until the relative change of the joint
    /// log-likelihood drops below `cfg.epsilon` or `cfg.max_iters` sweeps ran.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        x: ContextVector,
        y: f64,
        cfg: &GibbsConfig,
        rng: &mut R,
    ) -> Result<ObserveDiagnostics> {
        self.check_dim(&x)?;
        if !y.is_finite() {
            return Err(Error::InvalidConfig(format!("reward must be finite, got {y}")));
        }
        let k = self.draw_component(&x, y, rng);
        if k == self.components.len() {
            self.components.push(Component::empty(&self.prior));
        }
        let mut stats = self.components[k].stats.clone();
        stats.add(&x, y)?;
        self.components[k] = Component::from_stats(&self.prior, stats)?;
        self.history.push((x, y));
        self.assignments.push(k);

        let mut prev = self.joint_log_likelihood();
        let mut diag = ObserveDiagnostics::default();
        for sweep in 1..=cfg.max_iters {
            self.gibbs_sweep(rng)?;
            diag.sweeps_run = sweep;
            let cur = self.joint_log_likelihood();
            if relative_change(prev, cur) < cfg.epsilon {
                diag.converged = true;
                break;
            }
            prev = cur;
        }
        Ok(diag)
    }

    /// Checks conservation of counts, label validity and consistency of every
    /// component with a batch recomputation from its assigned observations.
    pub fn check_invariants(&self, tol: f64) -> std::result::Result<(), String> {
        if self.assignments.len() != self.history.len() {
            return Err("assignment vector length differs from history".into());
        }
        let total: usize = self.components.iter().map(Component::count).sum();
        if total != self.history.len() {
            return Err(format!("counts sum to {total}, history has {}", self.history.len()));
        }
        if let Some(z) = self.assignments.iter().find(|z| **z >= self.components.len()) {
            return Err(format!("assignment {z} references a missing component"));
        }
        if let PartitionPrior::FiniteDirichlet { components, .. } = self.partition {
            if self.components.len() != components {
                return Err("finite mixture changed its component count".into());
            }
        }
        for (k, comp) in self.components.iter().enumerate() {
            if self.partition.is_open() && comp.count() == 0 {
                return Err(format!("component {k} is empty"));
            }
            let batch = ComponentStats::from_observations(
                self.dim(),
                self.history
                    .iter()
                    .zip(&self.assignments)
                    .filter(|(_, z)| **z == k)
                    .map(|((x, y), _)| (x, *y)),
            );
            if batch.count() != comp.count() {
                return Err(format!("component {k} count mismatch"));
            }
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
            let stats_ok = comp
                .stats
                .gram()
                .iter()
                .zip(batch.gram().iter())
                .chain(comp.stats.cross().iter().zip(batch.cross().iter()))
                .all(|(a, b)| rel(*a, *b) <= tol)
                && rel(comp.stats.energy(), batch.energy()) <= tol;
            if !stats_ok {
                return Err(format!("component {k} statistics drifted from batch"));
            }
            let post = posterior_update(&self.prior, &batch).map_err(|e| e.to_string())?;
            let post_ok = comp
                .posterior
                .mean()
                .iter()
                .zip(post.mean().iter())
                .chain(comp.posterior.precision().iter().zip(post.precision().iter()))
                .all(|(a, b)| rel(*a, *b) <= tol)
                && rel(comp.posterior.alpha(), post.alpha()) <= tol
                && rel(comp.posterior.beta(), post.beta()) <= tol;
            if !post_ok {
                return Err(format!("component {k} posterior inconsistent with its statistics"));
            }
        }
        Ok(())
    }
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    let delta = (cur - prev).abs();
    if delta == 0.0 {
        return 0.0;
    }
    let scale = cur.abs();
    if scale == 0.0 {
        f64::INFINITY
    } else {
        delta / scale
    }
}
