//! Thompson sampling for contextual multi-armed bandits with per-arm
//! nonparametric (Pitman-Yor / Dirichlet process) mixtures of Gaussian
//! linear regressions as reward models.
//!
//! Modules, bottom up:
//!
//! - [`conjugate`]: Normal-inverse-Gamma updates, Student-t predictive and
//!   matrix-t block likelihood for one mixture component.
//! - [`npmix`]: per-arm mixture state and the warm-started collapsed Gibbs
//!   sampler.
//! - [`policies`]: nonparametric Thompson sampling and its baselines.
//! - [`environments`]: synthetic scenarios and the logged-data replayer.
//! - [`harness`]: replications, regret bookkeeping, aggregation and CSV output.

pub mod conjugate;
pub mod environments;
pub mod error;
pub mod harness;
pub mod npmix;
pub mod policies;
pub mod sampling;

pub use conjugate::{
    log_evidence, log_marginal_block, log_predictive, posterior_update, sample_params,
    ComponentStats, ContextVector, Direction, GaussianLinearParams, NigHyper,
};
pub use error::{Error, Result};
pub use npmix::{ArmState, Component, GibbsConfig, ObserveDiagnostics, PartitionPrior, PyConfig};
pub use environments::{
    builtin_scenario, replay, true_expected_reward, ContextSource, Environment, LoggedDataset,
    LoggedEvent, MixtureArmSpec, ReplayOutcome, ScenarioSpec, Step, BUILTIN_SCENARIOS,
};
pub use harness::{
    run_experiment, run_replication, AggregateRow, AggregateTable, ExperimentConfig,
    ExperimentOutput, RegretTrace, ScenarioRef, StepRecord,
};
pub use policies::{
    oracle_assignment_log_weights, Decision, LinearGaussianThompson, MixtureThompson, Policy,
    PolicyKind, PriorConfig, UniformRandom, UpdateDiagnostics,
};
