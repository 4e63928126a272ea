//! Comparison policies: CUCB, Exp3.M and uniform random selection.

use std::cmp::Ordering;

use rand::seq::index;

use crate::environment::RewardDraw;
use crate::error::{Error, Result};
use crate::lexp::{
    cap_ratio, compute_capping, compute_probabilities, estimate_rewards, exponential_update, Capping,
};
use crate::rng::RngHandle;
use crate::rounding::dependent_round_traced;
use crate::types::{RoundObservation, SelectionProbabilities};

/// Which reward a baseline optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardVariant {
    /// First-level reward `a` only (the "-1" variants).
    FirstLevel,
    /// Compound reward `a * b` (the "-2" variants).
    Compound,
}

impl RewardVariant {
    fn sample(self, a: f64, b: f64) -> f64 {
        match self {
            RewardVariant::FirstLevel => a,
            RewardVariant::Compound => a * b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CucbState {
    pub means: Vec<f64>,
    pub pulls: Vec<u64>,
    /// Rounds played so far.
    pub round: u64,
    pub variant: RewardVariant,
}

impl CucbState {
    pub fn new(arms: usize, variant: RewardVariant) -> Self {
        Self {
            means: vec![0.0; arms],
            pulls: vec![0; arms],
            round: 0,
            variant,
        }
    }
}

/// `sqrt(3 ln t / (2 n))`.
pub fn ucb_bonus(t: u64, pulls: u64) -> f64 {
    (3.0 * (t as f64).ln() / (2.0 * pulls as f64)).sqrt()
}

pub fn ucb_index(mean: f64, t: u64, pulls: u64) -> f64 {
    mean + ucb_bonus(t, pulls)
}

/// Number of initial round-robin rounds, `ceil(K / L)`.
pub fn cucb_init_rounds(arms: usize, select: usize) -> u64 {
    arms.div_ceil(select) as u64
}

/// Arms for the next round. The first `ceil(K / L)` rounds cycle through
/// blocks of `L` consecutive arms (wrapping at K) so every arm is pulled
/// once; afterwards the `L` largest UCB indices win, ties by index.
pub fn cucb_select(state: &CucbState, select: usize) -> Vec<usize> {
    let k = state.means.len();
    let t = state.round + 1;
    if state.round < cucb_init_rounds(k, select) {
        let start = state.round as usize * select;
        let mut arms: Vec<usize> = (start..start + select).map(|i| i % k).collect();
        arms.sort_unstable();
        arms.dedup();
        return arms;
    }
    let idx: Vec<f64> = (0..k)
        .map(|i| ucb_index(state.means[i], t, state.pulls[i]))
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        idx[j]
            .partial_cmp(&idx[i])
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    order.truncate(select);
    order.sort_unstable();
    order
}

pub fn cucb_update(state: &mut CucbState, obs: &RoundObservation) {
    for (i, a, b) in obs.iter() {
        let r = state.variant.sample(a, b);
        state.pulls[i] += 1;
        state.means[i] += (r - state.means[i]) / state.pulls[i] as f64;
    }
    state.round += 1;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp3mState {
    pub weights: Vec<f64>,
    pub round: u64,
}

impl Exp3mState {
    pub fn new(arms: usize) -> Self {
        Self {
            weights: vec![1.0; arms],
            round: 0,
        }
    }
}

/// Learning rate `L gamma / K` used by Exp3.M.
pub fn exp3m_learning_rate(gamma: f64, arms: usize, select: usize) -> f64 {
    select as f64 * gamma / arms as f64
}

#[derive(Debug, Clone)]
pub struct Exp3mRound {
    pub observation: RoundObservation,
    pub probabilities: SelectionProbabilities,
    pub capping: Capping,
}

/// One Exp3.M round: the LExp pipeline with no multiplier, feeding the
/// estimate of the chosen reward into the weight update.
pub fn exp3m_round(
    state: &mut Exp3mState,
    gamma: f64,
    select: usize,
    variant: RewardVariant,
    draw: &RewardDraw,
    rng: &mut RngHandle,
) -> Result<Exp3mRound> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::HyperparamViolation(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    let k = state.weights.len();
    let capping = compute_capping(&state.weights, cap_ratio(gamma, k, select))?;
    let probabilities = compute_probabilities(&state.weights, &capping, gamma, select)?;
    let rounded = dependent_round_traced(probabilities.as_slice(), select, rng)?;
    let observation = RoundObservation::from_draw(rounded.selected, &draw.first, &draw.second);
    let est = estimate_rewards(&observation, &probabilities);
    let gains = match variant {
        RewardVariant::FirstLevel => &est.first,
        RewardVariant::Compound => &est.compound,
    };
    exponential_update(
        &mut state.weights,
        &capping,
        exp3m_learning_rate(gamma, k, select),
        gains,
        state.round,
    )?;
    state.round += 1;
    Ok(Exp3mRound {
        observation,
        probabilities,
        capping,
    })
}

/// Uniformly random `L`-subset, ascending.
pub fn uniform_select(arms: usize, select: usize, rng: &mut RngHandle) -> Vec<usize> {
    let mut v = index::sample(rng, arms, select).into_vec();
    v.sort_unstable();
    v
}
