//! Constrained multi-play bandits with two-level (and nested) rewards.
//!
//! Each round a policy selects `L` of `K` arms, observes a first-level reward
//! `a` (a click) and a second-level reward `b` (revenue given a click) for
//! each selected arm, and collects the compound reward `a * b`. The goal is
//! to maximize cumulative compound reward while keeping the expected total
//! first-level reward of the selection at or above a threshold `h`.
//!
//! The crate provides [`lexp`] (Lagrangian exponential weights), the
//! comparison policies in [`baselines`], reward generators in
//! [`environment`], the benchmark LP in [`oracle`], regret and violation
//! accounting in [`metrics`], log preprocessing in [`ingest`] and a seeded
//! runner in [`experiment`].

pub mod baselines;
pub mod environment;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod io;
pub mod lexp;
pub mod metrics;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod rounding;
pub mod trace;
pub mod types;

pub use environment::{Environment, RewardDraw};
pub use error::{Error, Result};
pub use experiment::{run_experiment, Experiment, ExperimentConfig, PartialConfig, RevenueModel};
pub use lexp::{LexpHyperparams, LexpState};
pub use metrics::TraceRecord;
pub use oracle::{solve_constrained_lp, LpSolution};
pub use policy::{build_policy, Algorithm, Policy};
pub use rng::RngHandle;
pub use types::{validate_problem, ArmPool, ProblemSpec, RoundObservation, SelectionProbabilities};
