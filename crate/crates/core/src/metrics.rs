//! Cumulative reward, regret and violation accounting.

use crate::environment::RewardDraw;
use crate::error::{Error, Result};
use crate::oracle::solve_constrained_lp;
use crate::types::RoundObservation;

/// One row of an experiment trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    pub cum_first: f64,
    pub cum_compound: f64,
    pub regret: f64,
    /// Sum over rounds of `(h - sum of selected a_i)_+`.
    pub violation_perround: f64,
    /// `(sum over rounds of (h - sum of selected a_i))_+`.
    pub violation_eq4: f64,
    pub lambda: f64,
}

/// Running sums for one replica.
///
/// `cum_first` and `cum_compound` add the realized rewards of the selected
/// arms. `cum_g` holds the realized compound reward of every arm summed over
/// rounds, which is the benchmark's objective vector. Violations use the
/// true mean CTRs of the selected arms.
#[derive(Debug, Clone)]
pub struct Accumulator {
    mean_ctr: Vec<f64>,
    select: usize,
    threshold: f64,
    t: u64,
    cum_first: f64,
    cum_compound: f64,
    cum_g: Vec<f64>,
    violation_perround: f64,
    shortfall_sum: f64,
}

impl Accumulator {
    pub fn new(mean_ctr: Vec<f64>, select: usize, threshold: f64) -> Self {
        let k = mean_ctr.len();
        Self {
            mean_ctr,
            select,
            threshold,
            t: 0,
            cum_first: 0.0,
            cum_compound: 0.0,
            cum_g: vec![0.0; k],
            violation_perround: 0.0,
            shortfall_sum: 0.0,
        }
    }

    pub fn record(&mut self, obs: &RoundObservation, draw: &RewardDraw) {
        self.t += 1;
        self.cum_first += obs.sum_first();
        self.cum_compound += obs.sum_compound();
        for (i, g) in self.cum_g.iter_mut().enumerate() {
            *g += draw.compound(i);
        }
        let expected: f64 = obs.selected.iter().map(|&i| self.mean_ctr[i]).sum();
        let shortfall = self.threshold - expected;
        self.violation_perround += shortfall.max(0.0);
        self.shortfall_sum += shortfall;
    }

    pub fn rounds(&self) -> u64 {
        self.t
    }

    pub fn cum_first(&self) -> f64 {
        self.cum_first
    }

    pub fn cum_compound(&self) -> f64 {
        self.cum_compound
    }

    pub fn cumulative_g(&self) -> &[f64] {
        &self.cum_g
    }

    pub fn violation_perround(&self) -> f64 {
        self.violation_perround
    }

    pub fn violation_eq4(&self) -> f64 {
        self.shortfall_sum.max(0.0)
    }

    pub fn regret(&self) -> Result<f64> {
        regret_at(
            &self.cum_g,
            &self.mean_ctr,
            self.select,
            self.threshold,
            self.cum_compound,
        )
    }

    /// Snapshot including a freshly solved regret benchmark.
    pub fn snapshot(&self, lambda: f64) -> Result<TraceRecord> {
        Ok(TraceRecord {
            t: self.t,
            cum_first: self.cum_first,
            cum_compound: self.cum_compound,
            regret: self.regret()?,
            violation_perround: self.violation_perround,
            violation_eq4: self.violation_eq4(),
            lambda,
        })
    }
}

/// Cumulative first-level and compound rewards over a history of
/// observations.
pub fn accumulate<'a>(history: impl IntoIterator<Item = &'a RoundObservation>) -> (f64, f64) {
    history
        .into_iter()
        .fold((0.0, 0.0), |(f, c), o| (f + o.sum_first(), c + o.sum_compound()))
}

/// Benchmark value on cumulative compound rewards `cum_g` minus the realized
/// cumulative compound reward.
pub fn regret_at(
    cum_g: &[f64],
    mean_ctr: &[f64],
    select: usize,
    threshold: f64,
    cum_compound: f64,
) -> Result<f64> {
    let lp = solve_constrained_lp(cum_g, mean_ctr, select, threshold)?;
    Ok(lp.objective - cum_compound)
}

/// Per-round clamped violation: `sum_t (h - s_t)_+`.
pub fn violation_at(selected_sums: &[f64], threshold: f64) -> f64 {
    selected_sums.iter().map(|s| (threshold - s).max(0.0)).sum()
}

/// Violation clamped once at the end: `(sum_t (h - s_t))_+`.
pub fn violation_eq4(selected_sums: &[f64], threshold: f64) -> f64 {
    selected_sums.iter().map(|s| threshold - s).sum::<f64>().max(0.0)
}

pub fn pearson_correlation(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    if u.len() < 2 {
        return Err(Error::EmptyInput("correlation needs at least two points".into()));
    }
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut suv, mut suu, mut svv) = (0.0, 0.0, 0.0);
    for (x, y) in u.iter().zip(v) {
        let (dx, dy) = (x - mu, y - mv);
        suv += dx * dy;
        suu += dx * dx;
        svv += dy * dy;
    }
    if suu == 0.0 || svv == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((suv / (suu.sqrt() * svv.sqrt())).clamp(-1.0, 1.0))
}
