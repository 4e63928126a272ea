//! A common driver interface over LExp and the baselines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    cucb_select, cucb_update, exp3m_round, uniform_select, CucbState, Exp3mState, RewardVariant,
};
use crate::environment::RewardDraw;
use crate::error::{Error, Result};
use crate::lexp::{lexp_round, LexpHyperparams, LexpRound, LexpState};
use crate::rng::RngHandle;
use crate::types::RoundObservation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Lexp,
    #[serde(rename = "exp3m-1")]
    Exp3m1,
    #[serde(rename = "exp3m-2")]
    Exp3m2,
    #[serde(rename = "cucb-1")]
    Cucb1,
    #[serde(rename = "cucb-2")]
    Cucb2,
    Uniform,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Lexp,
        Algorithm::Exp3m1,
        Algorithm::Exp3m2,
        Algorithm::Cucb1,
        Algorithm::Cucb2,
        Algorithm::Uniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Lexp => "lexp",
            Algorithm::Exp3m1 => "exp3m-1",
            Algorithm::Exp3m2 => "exp3m-2",
            Algorithm::Cucb1 => "cucb-1",
            Algorithm::Cucb2 => "cucb-2",
            Algorithm::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

pub trait Policy {
    /// Chooses this round's arms and learns from their rewards in `draw`.
    fn play(&mut self, draw: &RewardDraw, rng: &mut RngHandle) -> Result<RoundObservation>;

    /// Current Lagrange multiplier; zero for policies without one.
    fn multiplier(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct LexpPolicy {
    pub state: LexpState,
    pub hp: LexpHyperparams,
    last: Option<LexpRound>,
}

impl LexpPolicy {
    pub fn new(hp: LexpHyperparams) -> Self {
        Self {
            state: LexpState::new(hp.arms),
            hp,
            last: None,
        }
    }

    /// Details of the most recent round.
    pub fn last_round(&self) -> Option<&LexpRound> {
        self.last.as_ref()
    }
}

impl Policy for LexpPolicy {
    fn play(&mut self, draw: &RewardDraw, rng: &mut RngHandle) -> Result<RoundObservation> {
        let round = lexp_round(&mut self.state, &self.hp, draw, rng)?;
        let obs = round.observation.clone();
        self.last = Some(round);
        Ok(obs)
    }

    fn multiplier(&self) -> f64 {
        self.state.multiplier
    }
}

#[derive(Debug, Clone)]
pub struct Exp3mPolicy {
    pub state: Exp3mState,
    pub gamma: f64,
    pub select: usize,
    pub variant: RewardVariant,
}

impl Exp3mPolicy {
    pub fn new(arms: usize, select: usize, gamma: f64, variant: RewardVariant) -> Self {
        Self {
            state: Exp3mState::new(arms),
            gamma,
            select,
            variant,
        }
    }
}

impl Policy for Exp3mPolicy {
    fn play(&mut self, draw: &RewardDraw, rng: &mut RngHandle) -> Result<RoundObservation> {
        exp3m_round(&mut self.state, self.gamma, self.select, self.variant, draw, rng)
            .map(|r| r.observation)
    }
}

#[derive(Debug, Clone)]
pub struct CucbPolicy {
    pub state: CucbState,
    pub select: usize,
}

impl CucbPolicy {
    pub fn new(arms: usize, select: usize, variant: RewardVariant) -> Self {
        Self {
            state: CucbState::new(arms, variant),
            select,
        }
    }
}

impl Policy for CucbPolicy {
    fn play(&mut self, draw: &RewardDraw, _rng: &mut RngHandle) -> Result<RoundObservation> {
        let sel = cucb_select(&self.state, self.select);
        let obs = RoundObservation::from_draw(sel, &draw.first, &draw.second);
        cucb_update(&mut self.state, &obs);
        Ok(obs)
    }
}

#[derive(Debug, Clone)]
pub struct UniformPolicy {
    pub arms: usize,
    pub select: usize,
}

impl Policy for UniformPolicy {
    fn play(&mut self, draw: &RewardDraw, rng: &mut RngHandle) -> Result<RoundObservation> {
        let sel = uniform_select(self.arms, self.select, rng);
        Ok(RoundObservation::from_draw(sel, &draw.first, &draw.second))
    }
}

/// Builds a boxed policy. `gamma`/`delta` default to `T^(-1/3)`.
pub fn build_policy(
    algorithm: Algorithm,
    arms: usize,
    select: usize,
    threshold: f64,
    horizon: u64,
    gamma: Option<f64>,
    delta: Option<f64>,
) -> Result<Box<dyn Policy + Send>> {
    let default = crate::lexp::default_rate(horizon);
    let gamma = gamma.unwrap_or(default);
    Ok(match algorithm {
        Algorithm::Lexp => {
            let hp = LexpHyperparams::new(arms, select, threshold, gamma, delta.unwrap_or(default))?;
            Box::new(LexpPolicy::new(hp))
        }
        Algorithm::Exp3m1 => Box::new(Exp3mPolicy::new(arms, select, gamma, RewardVariant::FirstLevel)),
        Algorithm::Exp3m2 => Box::new(Exp3mPolicy::new(arms, select, gamma, RewardVariant::Compound)),
        Algorithm::Cucb1 => Box::new(CucbPolicy::new(arms, select, RewardVariant::FirstLevel)),
        Algorithm::Cucb2 => Box::new(CucbPolicy::new(arms, select, RewardVariant::Compound)),
        Algorithm::Uniform => Box::new(UniformPolicy { arms, select }),
    })
}
