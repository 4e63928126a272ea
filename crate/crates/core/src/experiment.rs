//! Seeded experiment runner: policy against environment, checkpointed
//! traces, and a cross-replica summary.
//!
//! Replica `r` uses seed `seed + r`. Its policy, first-level rewards and
//! second-level rewards each draw from a separate stream of that seed, so a
//! trace depends only on the config and the replica index.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::environment::{Environment, NestedLevelSpec};
use crate::error::{Error, Result};
use crate::io::{read_arm_pool, read_child_pools};
use crate::lexp::default_rate;
use crate::metrics::{Accumulator, TraceRecord};
use crate::policy::{build_policy, Algorithm};
use crate::rng::{streams, RngHandle};
use crate::trace::{format_sig12, write_trace};
use crate::types::{validate_problem, ArmPool, ProblemSpec};

pub const DEFAULT_CHECKPOINT_INTERVAL: u64 = 100;

/// Nested second-level rewards: one child pool per arm, read from a CSV
/// with header `parent,arm_id,mean_ctr,mean_revenue`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NestedConfig {
    pub children: PathBuf,
    pub select: usize,
    #[serde(default)]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// Expected number of arms; checked against the pool when set.
    pub arms_count: Option<usize>,
    pub select: usize,
    pub threshold: f64,
    pub horizon: u64,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub seed: u64,
    pub replicas: u32,
    pub checkpoint_interval: u64,
    pub arms: PathBuf,
    pub out: PathBuf,
    pub drift: bool,
    pub nested: Option<NestedConfig>,
}

/// Config with every field optional, as read from a TOML file or collected
/// from command-line flags. Later layers override earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub algorithm: Option<Algorithm>,
    pub arms_count: Option<usize>,
    pub select: Option<usize>,
    pub threshold: Option<f64>,
    pub horizon: Option<u64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub replicas: Option<u32>,
    pub checkpoint_interval: Option<u64>,
    pub arms: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub drift: Option<bool>,
    pub nested: Option<NestedConfig>,
}

impl PartialConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a TOML config; relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg =
            Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            cfg.arms.as_mut().map(fix);
            cfg.out.as_mut().map(fix);
            if let Some(n) = cfg.nested.as_mut() {
                fix(&mut n.children);
            }
        }
        Ok(cfg)
    }

    /// Fields set in `other` win.
    pub fn merge(self, other: PartialConfig) -> Self {
        Self {
            algorithm: other.algorithm.or(self.algorithm),
            arms_count: other.arms_count.or(self.arms_count),
            select: other.select.or(self.select),
            threshold: other.threshold.or(self.threshold),
            horizon: other.horizon.or(self.horizon),
            gamma: other.gamma.or(self.gamma),
            delta: other.delta.or(self.delta),
            seed: other.seed.or(self.seed),
            replicas: other.replicas.or(self.replicas),
            checkpoint_interval: other.checkpoint_interval.or(self.checkpoint_interval),
            arms: other.arms.or(self.arms),
            out: other.out.or(self.out),
            drift: other.drift.or(self.drift),
            nested: other.nested.or(self.nested),
        }
    }

    pub fn resolve(self) -> Result<ExperimentConfig> {
        fn need<T>(v: Option<T>, name: &str) -> Result<T> {
            v.ok_or_else(|| Error::Config(format!("missing required setting `{name}`")))
        }
        let cfg = ExperimentConfig {
            algorithm: need(self.algorithm, "algorithm")?,
            arms_count: self.arms_count,
            select: need(self.select, "select")?,
            threshold: need(self.threshold, "threshold")?,
            horizon: need(self.horizon, "horizon")?,
            gamma: self.gamma,
            delta: self.delta,
            seed: self.seed.unwrap_or(0),
            replicas: self.replicas.unwrap_or(1),
            checkpoint_interval: self.checkpoint_interval.unwrap_or(DEFAULT_CHECKPOINT_INTERVAL),
            arms: need(self.arms, "arms")?,
            out: need(self.out, "out")?,
            drift: self.drift.unwrap_or(false),
            nested: self.nested,
        };
        if cfg.replicas == 0 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        if cfg.checkpoint_interval == 0 {
            return Err(Error::Config("checkpoint_interval must be at least 1".into()));
        }
        if cfg.drift && cfg.nested.is_some() {
            return Err(Error::Config("drift and nested rewards are mutually exclusive".into()));
        }
        Ok(cfg)
    }
}

/// How second-level rewards are generated.
#[derive(Debug, Clone)]
pub enum RevenueModel {
    Stationary,
    Drifting,
    Nested(Vec<NestedLevelSpec>),
}

/// A validated, loaded experiment that replicas can be run from.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub algorithm: Algorithm,
    pub pool: ArmPool,
    pub spec: ProblemSpec,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub seed: u64,
    pub checkpoint_interval: u64,
    pub revenue: RevenueModel,
}

impl Experiment {
    pub fn new(
        algorithm: Algorithm,
        pool: ArmPool,
        spec: ProblemSpec,
        revenue: RevenueModel,
        seed: u64,
    ) -> Result<Self> {
        let problem = validate_problem(pool, spec)?;
        let exp = Self {
            algorithm,
            pool: problem.pool,
            spec: problem.spec,
            gamma: None,
            delta: None,
            seed,
            checkpoint_interval: DEFAULT_CHECKPOINT_INTERVAL,
            revenue,
        };
        exp.check_policy()?;
        Ok(exp)
    }

    pub fn with_rates(mut self, gamma: Option<f64>, delta: Option<f64>) -> Result<Self> {
        self.gamma = gamma;
        self.delta = delta;
        self.check_policy()?;
        Ok(self)
    }

    pub fn with_checkpoint_interval(mut self, interval: u64) -> Self {
        self.checkpoint_interval = interval.max(1);
        self
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let pool = read_arm_pool(&cfg.arms)?;
        if let Some(k) = cfg.arms_count {
            if k != pool.len() {
                return Err(Error::Config(format!(
                    "arms_count = {k} but {} has {} arms",
                    cfg.arms.display(),
                    pool.len()
                )));
            }
        }
        let revenue = match (&cfg.nested, cfg.drift) {
            (Some(n), _) => {
                let kids = read_child_pools(&n.children, pool.len())?;
                RevenueModel::Nested(
                    kids.into_iter()
                        .map(|c| NestedLevelSpec::new(c, n.select, n.threshold))
                        .collect::<Result<_>>()?,
                )
            }
            (None, true) => RevenueModel::Drifting,
            (None, false) => RevenueModel::Stationary,
        };
        let spec = ProblemSpec::new(cfg.select, cfg.threshold, cfg.horizon)?;
        Ok(Self::new(cfg.algorithm, pool, spec, revenue, cfg.seed)?
            .with_rates(cfg.gamma, cfg.delta)?
            .with_checkpoint_interval(cfg.checkpoint_interval))
    }

    fn check_policy(&self) -> Result<()> {
        build_policy(
            self.algorithm,
            self.pool.len(),
            self.spec.select,
            self.spec.threshold,
            self.spec.horizon,
            self.gamma,
            self.delta,
        )
        .map(|_| ())
    }

    pub fn replica_seed(&self, replica: u32) -> u64 {
        self.seed.wrapping_add(replica as u64)
    }

    pub fn environment(&self, seed: u64) -> Result<Environment> {
        Ok(match &self.revenue {
            RevenueModel::Stationary => Environment::stationary(self.pool.clone(), seed),
            RevenueModel::Drifting => Environment::drifting(self.pool.clone(), self.spec.horizon, seed),
            RevenueModel::Nested(frames) => Environment::nested(self.pool.clone(), frames.clone(), seed)?,
        })
    }

    /// Runs one replica to the horizon, recording every
    /// `checkpoint_interval` rounds and at the final round.
    pub fn run_replica(&self, replica: u32) -> Result<Vec<TraceRecord>> {
        let horizon = self.spec.horizon;
        self.run_replica_with(replica, |t| t % self.checkpoint_interval == 0 || t == horizon)
    }

    /// Runs one replica, recording a trace row whenever `checkpoint(t)` holds.
    pub fn run_replica_with(
        &self,
        replica: u32,
        mut checkpoint: impl FnMut(u64) -> bool,
    ) -> Result<Vec<TraceRecord>> {
        let seed = self.replica_seed(replica);
        let mut env = self.environment(seed)?;
        let mut rng = RngHandle::with_stream(seed, streams::POLICY);
        let mut policy = build_policy(
            self.algorithm,
            self.pool.len(),
            self.spec.select,
            self.spec.threshold,
            self.spec.horizon,
            self.gamma,
            self.delta,
        )?;
        let mut acc = Accumulator::new(
            self.pool.mean_ctr().to_vec(),
            self.spec.select,
            self.spec.threshold,
        );
        let mut trace = Vec::new();
        for t in 1..=self.spec.horizon {
            let draw = env.draw()?;
            let obs = policy.play(&draw, &mut rng)?;
            acc.record(&obs, &draw);
            if checkpoint(t) {
                trace.push(acc.snapshot(policy.multiplier())?);
            }
        }
        Ok(trace)
    }

    /// Default exploration rate used when none was configured.
    pub fn effective_gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| default_rate(self.spec.horizon))
    }
}

#[derive(Debug)]
pub struct ReplicaResult {
    pub replica: u32,
    pub seed: u64,
    pub outcome: Result<Vec<TraceRecord>>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub replicas: Vec<ReplicaResult>,
    pub trace_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.replicas.iter().filter(|r| r.outcome.is_err()).count()
    }
}

pub fn trace_file_name(replica: u32) -> String {
    format!("trace_{replica}.csv")
}

pub const SUMMARY_HEADER: &str =
    "replica,seed,status,t,cum_first,cum_compound,regret,violation_perround,violation_eq4,lambda";

/// Runs every replica (in parallel), writes one trace per successful
/// replica and `summary.csv` with per-replica final rows plus mean and
/// standard deviation rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let exp = Experiment::from_config(cfg)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;

    let replicas: Vec<ReplicaResult> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| ReplicaResult {
            replica: r,
            seed: exp.replica_seed(r),
            outcome: exp.run_replica(r),
        })
        .collect();

    let mut trace_paths = Vec::new();
    for r in &replicas {
        if let Ok(trace) = &r.outcome {
            let path = cfg.out.join(trace_file_name(r.replica));
            write_trace(&path, trace)?;
            trace_paths.push(path);
        }
    }
    let summary_path = cfg.out.join("summary.csv");
    std::fs::write(&summary_path, render_summary(&replicas)).map_err(|e| Error::io(&summary_path, e))?;
    Ok(RunSummary {
        replicas,
        trace_paths,
        summary_path,
    })
}

fn render_summary(replicas: &[ReplicaResult]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    let mut finals: Vec<TraceRecord> = Vec::new();
    for r in replicas {
        match &r.outcome {
            Ok(trace) => {
                let last = trace.last().copied();
                if let Some(f) = last {
                    finals.push(f);
                    let _ = writeln!(out, "{},{},ok,{}", r.replica, r.seed, record_fields(&f));
                }
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                let _ = writeln!(out, "{},{},failed: {msg},,,,,,,", r.replica, r.seed);
            }
        }
    }
    if !finals.is_empty() {
        let stats = |f: fn(&TraceRecord) -> f64| -> (f64, f64) {
            let n = finals.len() as f64;
            let mean = finals.iter().map(f).sum::<f64>() / n;
            let var = if finals.len() > 1 {
                finals.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            (mean, var.sqrt())
        };
        let cols: [fn(&TraceRecord) -> f64; 7] = [
            |r| r.t as f64,
            |r| r.cum_first,
            |r| r.cum_compound,
            |r| r.regret,
            |r| r.violation_perround,
            |r| r.violation_eq4,
            |r| r.lambda,
        ];
        let (means, sds): (Vec<String>, Vec<String>) = cols
            .iter()
            .map(|&c| {
                let (m, s) = stats(c);
                (format_sig12(m), format_sig12(s))
            })
            .unzip();
        let _ = writeln!(out, "mean,,,{}", means.join(","));
        let _ = writeln!(out, "std,,,{}", sds.join(","));
    }
    out
}

fn record_fields(r: &TraceRecord) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        r.t,
        format_sig12(r.cum_first),
        format_sig12(r.cum_compound),
        format_sig12(r.regret),
        format_sig12(r.violation_perround),
        format_sig12(r.violation_eq4),
        format_sig12(r.lambda)
    )
}
