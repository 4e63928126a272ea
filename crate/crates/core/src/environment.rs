//! Reward generators: Bernoulli first-level rewards, stationary, drifting
//! (triangle wave) or nested second-level rewards.
//!
//! An environment draws a full length-K realization every round, whatever
//! the policy selects, from two RNG streams of its own: one for first-level
//! rewards and one for second-level rewards. Policies therefore face
//! identical reward sequences for identical seeds.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::rng::{streams, RngHandle};
use crate::types::{check_feasible, ArmPool};

/// Realized rewards of all K arms for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardDraw {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl RewardDraw {
    pub fn compound(&self, arm: usize) -> f64 {
        self.first[arm] * self.second[arm]
    }
}

/// Independent Bernoulli(`a_i`) draw for every arm.
pub fn draw_first_level(pool: &ArmPool, rng: &mut RngHandle) -> Vec<f64> {
    pool.mean_ctr().iter().map(|&a| rng.bernoulli(a)).collect()
}

const EDGE_TOL: f64 = 1e-12;

/// Second-level rewards moving linearly between 0 and each arm's mean,
/// reversing direction at either end.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftingRevenueState {
    pub current: Vec<f64>,
    /// `true` while moving up.
    pub ascending: Vec<bool>,
    pub rate: f64,
    pub ceiling: Vec<f64>,
}

/// Starts every arm uniformly in `[0, mean_i]` with a random direction and
/// step `10 / T`.
pub fn init_drift(pool: &ArmPool, horizon: u64, rng: &mut RngHandle) -> DriftingRevenueState {
    let ceiling = pool.mean_revenue().to_vec();
    let mut current = Vec::with_capacity(ceiling.len());
    let mut ascending = Vec::with_capacity(ceiling.len());
    for &m in &ceiling {
        current.push(rng.uniform() * m);
        ascending.push(rng.uniform() < 0.5);
    }
    DriftingRevenueState {
        current,
        ascending,
        rate: 10.0 / horizon.max(1) as f64,
        ceiling,
    }
}

/// Emits the current values, then moves each coordinate one step. A
/// coordinate sitting on the boundary it is heading towards turns around
/// before stepping; a step past a boundary is clamped to it.
pub fn step_drift(state: &mut DriftingRevenueState) -> Vec<f64> {
    let out = state.current.clone();
    for i in 0..state.current.len() {
        let top = state.ceiling[i];
        let cur = state.current[i];
        if state.ascending[i] && cur >= top - EDGE_TOL {
            state.ascending[i] = false;
        } else if !state.ascending[i] && cur <= EDGE_TOL {
            state.ascending[i] = true;
        }
        let next = if state.ascending[i] {
            cur + state.rate
        } else {
            cur - state.rate
        };
        state.current[i] = if next >= top - EDGE_TOL {
            top
        } else if next <= EDGE_TOL {
            0.0
        } else {
            next
        };
    }
    out
}

/// A pseudo frame nested under an arm: the arm's second-level reward is
/// built from `select` children of `children`. When `inner` is set, each
/// child's own second-level reward comes from a further nested frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedLevelSpec {
    pub children: ArmPool,
    pub select: usize,
    pub threshold: f64,
    pub inner: Option<Box<NestedLevelSpec>>,
}

impl NestedLevelSpec {
    pub fn new(children: ArmPool, select: usize, threshold: f64) -> Result<Self> {
        if select == 0 || select > children.len() {
            return Err(Error::ChildPoolTooSmall {
                pool: children.len(),
                select,
            });
        }
        check_feasible(children.mean_ctr(), select, threshold)?;
        Ok(Self {
            children,
            select,
            threshold,
            inner: None,
        })
    }

    pub fn with_inner(mut self, inner: NestedLevelSpec) -> Self {
        self.inner = Some(Box::new(inner));
        self
    }

    /// Number of feedback levels, at least 2.
    pub fn depth(&self) -> usize {
        2 + self.inner.as_ref().map_or(0, |s| s.depth() - 1)
    }
}

/// Chooses which children of a pseudo frame are shown.
pub trait ChildSelector {
    fn select(&self, spec: &NestedLevelSpec) -> Vec<usize>;
}

/// Fixed top-`L'` children by mean compound reward, ties by index.
#[derive(Debug, Clone, Copy, Default)]
pub struct TopCompound;

impl ChildSelector for TopCompound {
    fn select(&self, spec: &NestedLevelSpec) -> Vec<usize> {
        let g = spec.children.mean_compound();
        let mut order: Vec<usize> = (0..g.len()).collect();
        order.sort_by(|&i, &j| {
            g[j].partial_cmp(&g[i])
                .unwrap_or(Ordering::Equal)
                .then(i.cmp(&j))
        });
        order.truncate(spec.select);
        order.sort_unstable();
        order
    }
}

/// `sum_j a'_j b'_j / L'` over the selected children. The `1 / L'` factor
/// keeps the result in `[0, 1]`.
pub fn compose_revenue(first: &[f64], second: &[f64], select: usize) -> f64 {
    let s: f64 = first.iter().zip(second).map(|(a, b)| a * b).sum();
    s / select as f64
}

/// Draws one second-level realization through the nested frames.
pub fn nested_revenue(
    spec: &NestedLevelSpec,
    selector: &dyn ChildSelector,
    rng: &mut RngHandle,
) -> Result<f64> {
    let chosen = selector.select(spec);
    if chosen.len() != spec.select {
        return Err(Error::ChildPoolTooSmall {
            pool: spec.children.len(),
            select: spec.select,
        });
    }
    let mut first = Vec::with_capacity(chosen.len());
    let mut second = Vec::with_capacity(chosen.len());
    for &j in &chosen {
        first.push(rng.bernoulli(spec.children.mean_ctr()[j]));
        second.push(match &spec.inner {
            Some(inner) => nested_revenue(inner, selector, rng)?,
            None => spec.children.mean_revenue()[j],
        });
    }
    Ok(compose_revenue(&first, &second, spec.select))
}

#[derive(Debug, Clone)]
pub enum SecondLevel {
    /// `b_i^t` equals the pool's mean revenue every round.
    Stationary,
    Drifting(DriftingRevenueState),
    /// One nested frame per arm.
    Nested(Vec<NestedLevelSpec>),
}

/// Reward source for a single replica.
#[derive(Debug, Clone)]
pub struct Environment {
    pool: ArmPool,
    second: SecondLevel,
    first_rng: RngHandle,
    second_rng: RngHandle,
}

impl Environment {
    pub fn stationary(pool: ArmPool, seed: u64) -> Self {
        Self::build(pool, SecondLevel::Stationary, seed)
    }

    pub fn drifting(pool: ArmPool, horizon: u64, seed: u64) -> Self {
        let mut second_rng = RngHandle::with_stream(seed, streams::SECOND_LEVEL);
        let state = init_drift(&pool, horizon, &mut second_rng);
        Self {
            pool,
            second: SecondLevel::Drifting(state),
            first_rng: RngHandle::with_stream(seed, streams::FIRST_LEVEL),
            second_rng,
        }
    }

    pub fn nested(pool: ArmPool, frames: Vec<NestedLevelSpec>, seed: u64) -> Result<Self> {
        if frames.len() != pool.len() {
            return Err(Error::DimensionMismatch {
                expected: pool.len(),
                found: frames.len(),
            });
        }
        Ok(Self::build(pool, SecondLevel::Nested(frames), seed))
    }

    fn build(pool: ArmPool, second: SecondLevel, seed: u64) -> Self {
        Self {
            pool,
            second,
            first_rng: RngHandle::with_stream(seed, streams::FIRST_LEVEL),
            second_rng: RngHandle::with_stream(seed, streams::SECOND_LEVEL),
        }
    }

    pub fn pool(&self) -> &ArmPool {
        &self.pool
    }

    pub fn draw(&mut self) -> Result<RewardDraw> {
        let first = draw_first_level(&self.pool, &mut self.first_rng);
        let second = match &mut self.second {
            SecondLevel::Stationary => self.pool.mean_revenue().to_vec(),
            SecondLevel::Drifting(state) => step_drift(state),
            SecondLevel::Nested(frames) => frames
                .iter()
                .map(|f| nested_revenue(f, &TopCompound, &mut self.second_rng))
                .collect::<Result<_>>()?,
        };
        Ok(RewardDraw { first, second })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn drift(mean: f64, rate: f64, start: f64, up: bool) -> DriftingRevenueState {
        DriftingRevenueState {
            current: vec![start],
            ascending: vec![up],
            rate,
            ceiling: vec![mean],
        }
    }

    #[test]
    fn triangle_wave_reverses_at_mean() {
        let mut s = drift(0.6, 0.1, 0.3, true);
        let got: Vec<f64> = (0..8).map(|_| step_drift(&mut s)[0]).collect();
        let want = [0.3, 0.4, 0.5, 0.6, 0.5, 0.4, 0.3, 0.2];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-9, "{got:?}");
        }
    }

    #[test]
    fn zero_ceiling_is_constant() {
        let mut s = drift(0.0, 0.1, 0.0, true);
        for _ in 0..50 {
            assert_eq!(step_drift(&mut s)[0], 0.0);
        }
    }

    #[test]
    fn start_at_mean_turns_immediately() {
        let mut s = drift(0.5, 0.1, 0.5, true);
        assert_eq!(step_drift(&mut s)[0], 0.5);
        assert!((step_drift(&mut s)[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn period_is_twice_mean_over_rate() {
        let mut s = drift(0.5, 0.125, 0.0, true);
        let first: Vec<f64> = (0..8).map(|_| step_drift(&mut s)[0]).collect();
        let second: Vec<f64> = (0..8).map(|_| step_drift(&mut s)[0]).collect();
        assert_eq!(first, second);
        assert_eq!(first[4], 0.5);
    }

    #[test]
    fn init_drift_rate_and_bounds() {
        let pool = ArmPool::new(vec![0.5, 0.5], vec![0.0, 0.8]).unwrap();
        let mut rng = RngHandle::new(5);
        let s = init_drift(&pool, 100, &mut rng);
        assert!((s.rate - 0.1).abs() < 1e-15);
        assert_eq!(s.current[0], 0.0);
        assert!(s.current[1] >= 0.0 && s.current[1] <= 0.8);
    }

    #[test]
    fn init_drift_mean_is_half_ceiling() {
        let pool = ArmPool::new(vec![0.5], vec![0.8]).unwrap();
        let n = 100_000;
        let mut total = 0.0;
        for seed in 0..n {
            let mut rng = RngHandle::new(seed);
            total += init_drift(&pool, 10, &mut rng).current[0];
        }
        let mean = total / n as f64;
        // sd of U[0, 0.8] is 0.8 / sqrt(12)
        let se = 0.8 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 0.4).abs() < 4.0 * se, "{mean}");
    }

    #[test]
    fn bernoulli_edges_and_mean() {
        let pool = ArmPool::new(vec![0.0, 1.0, 0.3], vec![0.5; 3]).unwrap();
        let mut rng = RngHandle::new(8);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let d = draw_first_level(&pool, &mut rng);
            assert_eq!(d[0], 0.0);
            assert_eq!(d[1], 1.0);
            sum += d[2];
        }
        assert!((sum / n as f64 - 0.3).abs() < 0.006);
    }

    #[test]
    fn first_level_draws_uncorrelated() {
        let pool = ArmPool::new(vec![0.4, 0.6], vec![0.5; 2]).unwrap();
        let mut rng = RngHandle::new(9);
        let (mut u, mut v) = (Vec::new(), Vec::new());
        for _ in 0..100_000 {
            let d = draw_first_level(&pool, &mut rng);
            u.push(d[0]);
            v.push(d[1]);
        }
        let r = crate::metrics::pearson_correlation(&u, &v).unwrap();
        assert!(r.abs() < 0.01, "{r}");
    }

    #[test]
    fn bernoulli_chi_square() {
        // 1 degree of freedom, p = 0.001 critical value 10.828
        for &p in &[0.1, 0.5, 0.9] {
            let pool = ArmPool::new(vec![p], vec![0.5]).unwrap();
            let mut rng = RngHandle::new((p * 100.0) as u64);
            let n = 100_000;
            let ones: f64 = (0..n).map(|_| draw_first_level(&pool, &mut rng)[0]).sum();
            let e1 = n as f64 * p;
            let e0 = n as f64 * (1.0 - p);
            let chi = (ones - e1).powi(2) / e1 + ((n as f64 - ones) - e0).powi(2) / e0;
            assert!(chi < 10.828, "p = {p}: chi2 = {chi}");
        }
    }

    #[test]
    fn compose_examples() {
        assert_eq!(compose_revenue(&[1.0], &[0.5], 1), 0.5);
        assert_eq!(compose_revenue(&[0.0, 0.0], &[0.7, 0.9], 2), 0.0);
        assert!((compose_revenue(&[1.0, 1.0], &[0.4, 0.2], 2) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn nested_frames_validate_and_recurse() {
        let kids = ArmPool::new(vec![1.0, 1.0, 0.2], vec![0.4, 0.2, 0.9]).unwrap();
        assert!(matches!(
            NestedLevelSpec::new(kids.clone(), 4, 0.0),
            Err(Error::ChildPoolTooSmall { .. })
        ));
        let spec = NestedLevelSpec::new(kids.clone(), 2, 1.0).unwrap();
        assert_eq!(spec.depth(), 2);
        let mut rng = RngHandle::new(1);
        // top-2 by compound are arms 0 (0.4) and 1 (0.2); both always click
        let v = nested_revenue(&spec, &TopCompound, &mut rng).unwrap();
        assert!((v - 0.3).abs() < 1e-15);

        let deep = spec.clone().with_inner(spec.clone());
        assert_eq!(deep.depth(), 3);
        let v = nested_revenue(&deep, &TopCompound, &mut rng).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
    }

    #[test]
    fn environment_streams_are_separate() {
        let pool = ArmPool::new(vec![0.5; 4], vec![0.5; 4]).unwrap();
        let mut a = Environment::drifting(pool.clone(), 100, 3);
        let mut b = Environment::stationary(pool, 3);
        // first-level stream is unaffected by how the second level is generated
        for _ in 0..50 {
            assert_eq!(a.draw().unwrap().first, b.draw().unwrap().first);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn drift_stays_in_range(mean in 0.0f64..=1.0, rate in 1e-4f64..0.3, start in 0.0f64..=1.0, up: bool) {
            let mut s = drift(mean, rate, start * mean, up);
            for _ in 0..1_000_000 {
                let v = step_drift(&mut s)[0];
                prop_assert!((0.0..=mean).contains(&v));
            }
        }
    }
}
