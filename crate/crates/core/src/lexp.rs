//! LExp: Lagrangian exponential weights for selecting `L` of `K` arms under a
//! threshold on the expected total first-level reward.
//!
//! Each round runs weight capping, marginal probabilities, dependent
//! rounding, importance-weighted reward estimation, the exponential weight
//! update and the projected multiplier update, in that order.

use std::cmp::Ordering;

use crate::environment::RewardDraw;
use crate::error::{Error, Result};
use crate::rng::RngHandle;
use crate::rounding::dependent_round_traced;
use crate::types::{ProblemSpec, RoundObservation, SelectionProbabilities};

/// Weights are divided by their maximum once it exceeds this value.
pub const RENORM_LIMIT: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexpHyperparams {
    pub arms: usize,
    pub select: usize,
    pub threshold: f64,
    /// Exploration rate `gamma` in (0, 1).
    pub gamma: f64,
    /// Multiplier regularizer `delta`.
    pub delta: f64,
    /// Learning rate `zeta = gamma * delta * L / ((delta + L) * K)`.
    pub learning_rate: f64,
    /// Capping ratio `beta = (1/L - gamma/K) / (1 - gamma)`.
    pub cap_ratio: f64,
}

impl LexpHyperparams {
    pub fn new(arms: usize, select: usize, threshold: f64, gamma: f64, delta: f64) -> Result<Self> {
        if arms == 0 || select == 0 || select > arms {
            return Err(Error::HyperparamViolation(format!(
                "need 1 <= L <= K, got L = {select}, K = {arms}"
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::HyperparamViolation(format!(
                "gamma must lie in (0, 1), got {gamma}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::HyperparamViolation(format!(
                "delta must be positive, got {delta}"
            )));
        }
        let bound = delta_lower_bound(gamma, select);
        if delta < bound {
            return Err(Error::HyperparamViolation(format!(
                "delta = {delta} is below the required lower bound {bound}"
            )));
        }
        if !(threshold >= 0.0 && threshold <= select as f64) {
            return Err(Error::HyperparamViolation(format!(
                "threshold {threshold} must lie in [0, L]"
            )));
        }
        let rate = learning_rate(gamma, delta, arms, select);
        // the multiplier bound h / delta needs a nonnegative decay factor
        if delta * rate > 1.0 {
            return Err(Error::HyperparamViolation(format!(
                "delta * zeta = {} exceeds 1; the multiplier would overshoot h / delta",
                delta * rate
            )));
        }
        Ok(Self {
            arms,
            select,
            threshold,
            gamma,
            delta,
            learning_rate: rate,
            cap_ratio: cap_ratio(gamma, arms, select),
        })
    }

    /// `gamma = delta = T^(-1/3)`.
    pub fn from_horizon(arms: usize, select: usize, threshold: f64, horizon: u64) -> Result<Self> {
        let g = default_rate(horizon);
        Self::new(arms, select, threshold, g, g)
    }

    /// Replaces the learning rate, keeping everything else.
    pub fn with_learning_rate(mut self, learning_rate: f64) -> Self {
        self.learning_rate = learning_rate;
        self
    }

    /// Upper bound `h / delta` on the multiplier.
    pub fn multiplier_bound(&self) -> f64 {
        self.threshold / self.delta
    }

    /// Smallest marginal any arm can receive, `L * gamma / K`.
    pub fn min_probability(&self) -> f64 {
        self.select as f64 * self.gamma / self.arms as f64
    }
}

pub fn default_rate(horizon: u64) -> f64 {
    (horizon as f64).powf(-1.0 / 3.0)
}

pub fn learning_rate(gamma: f64, delta: f64, arms: usize, select: usize) -> f64 {
    let (k, l) = (arms as f64, select as f64);
    gamma * delta * l / ((delta + l) * k)
}

pub fn cap_ratio(gamma: f64, arms: usize, select: usize) -> f64 {
    let (k, l) = (arms as f64, select as f64);
    (1.0 / l - gamma / k) / (1.0 - gamma)
}

/// `4 (e - 2) gamma L / (1 - gamma) - L`.
pub fn delta_lower_bound(gamma: f64, select: usize) -> f64 {
    let l = select as f64;
    4.0 * (std::f64::consts::E - 2.0) * gamma * l / (1.0 - gamma) - l
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexpState {
    pub weights: Vec<f64>,
    pub multiplier: f64,
    pub round: u64,
}

impl LexpState {
    pub fn new(arms: usize) -> Self {
        Self {
            weights: vec![1.0; arms],
            multiplier: 0.0,
            round: 0,
        }
    }
}

pub fn init_lexp(
    arms: usize,
    spec: &ProblemSpec,
    gamma: f64,
    delta: f64,
) -> Result<(LexpState, LexpHyperparams)> {
    let hp = LexpHyperparams::new(arms, spec.select, spec.threshold, gamma, delta)?;
    Ok((LexpState::new(arms), hp))
}

/// Result of weight capping. `alpha` is `None` when no weight is large
/// enough to trigger capping; `capped` is then empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Capping {
    pub alpha: Option<f64>,
    pub capped: Vec<usize>,
}

impl Capping {
    pub fn none() -> Self {
        Self {
            alpha: None,
            capped: Vec::new(),
        }
    }

    pub fn is_capped(&self, arm: usize) -> bool {
        self.capped.contains(&arm)
    }

    fn mask(&self, arms: usize) -> Vec<bool> {
        let mut m = vec![false; arms];
        for &i in &self.capped {
            m[i] = true;
        }
        m
    }
}

/// Arm indices ordered by weight descending, index ascending.
fn descending_order(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        weights[j]
            .partial_cmp(&weights[i])
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    order
}

/// Finds `alpha` with `alpha / (k * alpha + S) = beta`, where `k` counts the
/// weights at or above `alpha` and `S` sums the rest.
pub fn compute_capping(weights: &[f64], beta: f64) -> Result<Capping> {
    let total: f64 = weights.iter().sum();
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max < beta * total {
        return Ok(Capping::none());
    }

    let order = descending_order(weights);
    let n = weights.len();
    // suffix[k] = sum of the n - k smallest weights
    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + weights[order[k]];
    }

    const REL: f64 = 1e-12;
    for k in 1..=n {
        let denom = 1.0 - k as f64 * beta;
        if denom <= 0.0 {
            break;
        }
        let alpha = beta * suffix[k] / denom;
        let kth = weights[order[k - 1]];
        if kth < alpha * (1.0 - REL) {
            continue;
        }
        if k < n && weights[order[k]] > alpha * (1.0 + REL) {
            continue;
        }
        let mut capped: Vec<usize> = order[..k].to_vec();
        capped.extend(order[k..].iter().copied().filter(|&i| weights[i] >= alpha));
        capped.sort_unstable();
        return Ok(Capping {
            alpha: Some(alpha),
            capped,
        });
    }
    Err(Error::CappingUnsolvable { beta })
}

/// `x_i = L [(1 - gamma) w_i / sum(w) + gamma / K]` with capped weights
/// replaced by `alpha`. Capped arms get probability exactly 1.
pub fn compute_probabilities(
    weights: &[f64],
    capping: &Capping,
    gamma: f64,
    select: usize,
) -> Result<SelectionProbabilities> {
    let k = weights.len();
    let mask = capping.mask(k);
    let capped_weight = |i: usize| match capping.alpha {
        Some(a) if mask[i] => a,
        _ => weights[i],
    };
    let total: f64 = (0..k).map(capped_weight).sum();
    let l = select as f64;
    let floor = gamma / k as f64;
    let probs = (0..k)
        .map(|i| {
            if mask[i] {
                1.0
            } else {
                (l * ((1.0 - gamma) * capped_weight(i) / total + floor)).min(1.0)
            }
        })
        .collect();
    SelectionProbabilities::new(probs, select)
}

/// Importance-weighted estimates; zero for arms not selected.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardEstimates {
    pub first: Vec<f64>,
    pub compound: Vec<f64>,
}

pub fn estimate_rewards(obs: &RoundObservation, probs: &SelectionProbabilities) -> RewardEstimates {
    let k = probs.len();
    let x = probs.as_slice();
    let mut first = vec![0.0; k];
    let mut compound = vec![0.0; k];
    for (i, a, b) in obs.iter() {
        first[i] = a / x[i];
        compound[i] = a * b / x[i];
    }
    RewardEstimates { first, compound }
}

/// Bookkeeping produced by a weight update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightUpdate {
    /// Largest exponent applied to an uncapped weight.
    pub max_exponent: f64,
    /// Factor all weights were divided by, if renormalized this round.
    pub renormalized: Option<f64>,
}

/// Multiplies every uncapped weight by `exp(rate * gain_i)`; capped weights
/// are left as they are. Renormalizes by the maximum when it grows past
/// [`RENORM_LIMIT`]; weights never drop below the smallest positive normal.
pub(crate) fn exponential_update(
    weights: &mut [f64],
    capping: &Capping,
    rate: f64,
    gains: &[f64],
    round: u64,
) -> Result<WeightUpdate> {
    let mask = capping.mask(weights.len());
    let mut max_exponent = 0.0f64;
    for (i, w) in weights.iter_mut().enumerate() {
        if mask[i] {
            continue;
        }
        let e = rate * gains[i];
        max_exponent = max_exponent.max(e);
        *w *= e.exp();
        if !w.is_finite() {
            return Err(Error::NumericOverflow { round });
        }
    }
    let max = weights.iter().copied().fold(0.0, f64::max);
    let renormalized = if max > RENORM_LIMIT {
        for w in weights.iter_mut() {
            *w = (*w / max).max(f64::MIN_POSITIVE);
        }
        Some(max)
    } else {
        None
    };
    Ok(WeightUpdate {
        max_exponent,
        renormalized,
    })
}

/// Applies the weight update with gain `g_hat + lambda * a_hat` and the
/// projected multiplier update, then advances the round counter.
pub fn update_state(
    state: &mut LexpState,
    est: &RewardEstimates,
    probs: &SelectionProbabilities,
    capping: &Capping,
    hp: &LexpHyperparams,
) -> Result<WeightUpdate> {
    let lambda = state.multiplier;
    let gains: Vec<f64> = est
        .compound
        .iter()
        .zip(&est.first)
        .map(|(g, a)| g + lambda * a)
        .collect();
    let update = exponential_update(
        &mut state.weights,
        capping,
        hp.learning_rate,
        &gains,
        state.round,
    )?;
    let observed: f64 = est
        .first
        .iter()
        .zip(probs.as_slice())
        .map(|(a, x)| a * x)
        .sum();
    state.multiplier = next_multiplier(lambda, observed, hp);
    state.round += 1;
    Ok(update)
}

/// `[(1 - delta zeta) lambda - zeta (observed / (1 - gamma) - h)]_+`.
pub fn next_multiplier(lambda: f64, observed_first: f64, hp: &LexpHyperparams) -> f64 {
    let z = hp.learning_rate;
    let v = (1.0 - hp.delta * z) * lambda - z * (observed_first / (1.0 - hp.gamma) - hp.threshold);
    v.max(0.0)
}

/// Everything produced by one LExp round.
#[derive(Debug, Clone)]
pub struct LexpRound {
    pub observation: RoundObservation,
    pub probabilities: SelectionProbabilities,
    pub capping: Capping,
    pub update: WeightUpdate,
    pub pair_steps: usize,
}

pub fn lexp_round(
    state: &mut LexpState,
    hp: &LexpHyperparams,
    draw: &RewardDraw,
    rng: &mut RngHandle,
) -> Result<LexpRound> {
    let capping = compute_capping(&state.weights, hp.cap_ratio)?;
    let probabilities = compute_probabilities(&state.weights, &capping, hp.gamma, hp.select)?;
    let rounded = dependent_round_traced(probabilities.as_slice(), hp.select, rng)?;
    let observation = RoundObservation::from_draw(rounded.selected, &draw.first, &draw.second);
    let est = estimate_rewards(&observation, &probabilities);
    let update = update_state(state, &est, &probabilities, &capping, hp)?;
    Ok(LexpRound {
        observation,
        probabilities,
        capping,
        update,
        pair_steps: rounded.pair_steps,
    })
}
