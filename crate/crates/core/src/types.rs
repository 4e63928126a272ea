//! Domain types shared by the policies, environments and oracles.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Tolerance on `sum(x) == L` and on the `[0, 1]` box for selection vectors.
pub const PROB_TOL: f64 = 1e-9;

/// Ground truth for K arms: mean first-level reward (CTR) and mean
/// second-level reward (revenue), both in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmPool {
    ids: Vec<u64>,
    mean_ctr: Vec<f64>,
    mean_revenue: Vec<f64>,
}

impl ArmPool {
    /// Builds a pool whose arm ids are `0..K`.
    pub fn new(mean_ctr: Vec<f64>, mean_revenue: Vec<f64>) -> Result<Self> {
        let ids = (0..mean_ctr.len() as u64).collect();
        Self::with_ids(ids, mean_ctr, mean_revenue)
    }

    pub fn with_ids(ids: Vec<u64>, mean_ctr: Vec<f64>, mean_revenue: Vec<f64>) -> Result<Self> {
        let k = mean_ctr.len();
        if k == 0 {
            return Err(Error::InvalidPool("pool must contain at least one arm".into()));
        }
        if mean_revenue.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: mean_revenue.len(),
            });
        }
        if ids.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: ids.len(),
            });
        }
        for (i, (&a, &b)) in mean_ctr.iter().zip(&mean_revenue).enumerate() {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidPool(format!("mean_ctr[{i}] = {a} outside [0, 1]")));
            }
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::InvalidPool(format!(
                    "mean_revenue[{i}] = {b} outside [0, 1]"
                )));
            }
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPool("duplicate arm_id".into()));
        }
        Ok(Self {
            ids,
            mean_ctr,
            mean_revenue,
        })
    }

    pub fn len(&self) -> usize {
        self.mean_ctr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_ctr.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn mean_ctr(&self) -> &[f64] {
        &self.mean_ctr
    }

    pub fn mean_revenue(&self) -> &[f64] {
        &self.mean_revenue
    }

    /// Expected compound reward `a_i * b_i` per arm.
    pub fn mean_compound(&self) -> Vec<f64> {
        self.mean_ctr
            .iter()
            .zip(&self.mean_revenue)
            .map(|(a, b)| a * b)
            .collect()
    }
}

/// Per-round selection size `L`, threshold `h` and horizon `T`.
///
/// `h = 0` is accepted and means the unconstrained multi-play problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub select: usize,
    pub threshold: f64,
    pub horizon: u64,
}

impl ProblemSpec {
    pub fn new(select: usize, threshold: f64, horizon: u64) -> Result<Self> {
        if select == 0 {
            return Err(Error::InvalidProblem("L must be at least 1".into()));
        }
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "threshold must be finite and nonnegative, got {threshold}"
            )));
        }
        if horizon == 0 {
            return Err(Error::InvalidProblem("horizon must be at least 1".into()));
        }
        Ok(Self {
            select,
            threshold,
            horizon,
        })
    }
}

/// A pool and a problem spec that passed [`validate_problem`].
#[derive(Debug, Clone)]
pub struct Problem {
    pub pool: ArmPool,
    pub spec: ProblemSpec,
}

/// Sum of the `l` largest entries of `values`.
pub fn top_sum(values: &[f64], l: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    v.iter().take(l).sum()
}

/// Checks `L <= K` and that the relaxed feasible set is nonempty, i.e. the
/// `L` largest CTRs sum to at least `h`.
pub fn validate_problem(pool: ArmPool, spec: ProblemSpec) -> Result<Problem> {
    if spec.select > pool.len() {
        return Err(Error::InvalidProblem(format!(
            "L = {} exceeds K = {}",
            spec.select,
            pool.len()
        )));
    }
    check_feasible(pool.mean_ctr(), spec.select, spec.threshold)?;
    Ok(Problem { pool, spec })
}

pub(crate) fn check_feasible(a: &[f64], l: usize, h: f64) -> Result<f64> {
    let achievable = top_sum(a, l);
    if achievable < h {
        return Err(Error::Infeasible {
            threshold: h,
            achievable,
        });
    }
    Ok(achievable)
}

/// Marginal selection probabilities: entries in `[0, 1]` summing to `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionProbabilities {
    probs: Vec<f64>,
}

impl SelectionProbabilities {
    pub fn new(probs: Vec<f64>, select: usize) -> Result<Self> {
        for (i, &p) in probs.iter().enumerate() {
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
                return Err(Error::MalformedVector(format!("entry {i} = {p} outside [0, 1]")));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - select as f64).abs() > PROB_TOL {
            return Err(Error::MalformedVector(format!(
                "entries sum to {sum}, expected {select}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// What a policy saw in one round: the selected arms (ascending) and their
/// realized first- and second-level rewards, aligned with `selected`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundObservation {
    pub selected: Vec<usize>,
    pub first_level: Vec<f64>,
    pub second_level: Vec<f64>,
}

impl RoundObservation {
    /// Reads the rewards of `selected` out of full per-arm realization vectors.
    pub fn from_draw(mut selected: Vec<usize>, first: &[f64], second: &[f64]) -> Self {
        selected.sort_unstable();
        let first_level = selected.iter().map(|&i| first[i]).collect();
        let second_level = selected.iter().map(|&i| second[i]).collect();
        Self {
            selected,
            first_level,
            second_level,
        }
    }

    /// `(arm, a, b)` triples.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.selected
            .iter()
            .zip(&self.first_level)
            .zip(&self.second_level)
            .map(|((&i, &a), &b)| (i, a, b))
    }

    pub fn sum_first(&self) -> f64 {
        self.first_level.iter().sum()
    }

    pub fn sum_compound(&self) -> f64 {
        self.first_level
            .iter()
            .zip(&self.second_level)
            .map(|(a, b)| a * b)
            .sum()
    }
}
