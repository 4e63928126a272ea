//! Exact solvers for the relaxed selection problem
//!
//! ```text
//! max g.x  s.t.  a.x >= h,  sum(x) = L,  x in [0, 1]^K
//! ```
//!
//! [`solve_constrained_lp`] scans the Lagrangian `g + mu a` over `mu >= 0`.
//! For fixed `mu` the top-`L` set by score is optimal; the constraint value
//! of that set is nondecreasing in `mu` and only changes at pairwise
//! crossing points. The optimum blends the two adjacent integral sets at the
//! crossing where the constraint value passes `h`.
//!
//! [`brute_force_lp`] enumerates LP vertices and [`integer_knapsack_reference`]
//! enumerates integral subsets; both are small-K cross-checks.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::types::check_feasible;

const FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// `a.x - h`.
    pub constraint_slack: f64,
    /// Optimal multiplier of the threshold constraint, when known.
    pub multiplier: Option<f64>,
}

impl LpSolution {
    fn from_x(x: Vec<f64>, g: &[f64], a: &[f64], h: f64, multiplier: Option<f64>) -> Self {
        let objective = dot(g, &x);
        let constraint_slack = dot(a, &x) - h;
        Self {
            x,
            objective,
            constraint_slack,
            multiplier,
        }
    }

    pub fn fractional_count(&self) -> usize {
        self.x.iter().filter(|&&v| v > 0.0 && v < 1.0).count()
    }
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn check_inputs(g: &[f64], a: &[f64], select: usize) -> Result<()> {
    if g.len() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: g.len(),
        });
    }
    if select == 0 || select > a.len() {
        return Err(Error::InvalidProblem(format!(
            "L = {select} must lie in [1, K = {}]",
            a.len()
        )));
    }
    Ok(())
}

/// Top-`L` set by `g + mu a`, ties by larger `a` then smaller index.
fn top_set(g: &[f64], a: &[f64], mu: f64, select: usize) -> Vec<usize> {
    let score = |i: usize| g[i] + mu * a[i];
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&i, &j| {
        score(j)
            .partial_cmp(&score(i))
            .unwrap_or(Ordering::Equal)
            .then(a[j].partial_cmp(&a[i]).unwrap_or(Ordering::Equal))
            .then(i.cmp(&j))
    });
    order.truncate(select);
    order.sort_unstable();
    order
}

fn set_sum(v: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&i| v[i]).sum()
}

fn indicator(k: usize, set: &[usize]) -> Vec<f64> {
    let mut x = vec![0.0; k];
    for &i in set {
        x[i] = 1.0;
    }
    x
}

/// Maximizer of `g.x` over the relaxed feasible set, with at most two
/// fractional coordinates.
pub fn solve_constrained_lp(g: &[f64], a: &[f64], select: usize, h: f64) -> Result<LpSolution> {
    check_inputs(g, a, select)?;
    check_feasible(a, select, h)?;
    let k = g.len();

    let base = top_set(g, a, 0.0, select);
    if set_sum(a, &base) >= h {
        return Ok(LpSolution::from_x(indicator(k, &base), g, a, h, Some(0.0)));
    }

    let mut breaks: Vec<f64> = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let da = a[j] - a[i];
            if da != 0.0 {
                let mu = (g[i] - g[j]) / da;
                if mu > 0.0 && mu.is_finite() {
                    breaks.push(mu);
                }
            }
        }
    }
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    breaks.dedup();

    // interval m is (breaks[m-1], breaks[m]); interval 0 starts at 0 and the
    // last one is unbounded above
    let probe = |m: usize| -> f64 {
        match (m.checked_sub(1).map(|p| breaks[p]), breaks.get(m)) {
            (None, Some(&hi)) => hi / 2.0,
            (Some(lo), Some(&hi)) => 0.5 * (lo + hi),
            (Some(lo), None) => 2.0 * lo + 1.0,
            (None, None) => 1.0,
        }
    };
    let reaches = |m: usize| set_sum(a, &top_set(g, a, probe(m), select)) >= h - FEAS_TOL;

    // the last interval's set maximizes a.x, so it reaches h
    let (mut lo, mut hi) = (0usize, breaks.len());
    if reaches(0) {
        hi = 0;
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let m = hi;
    let upper = top_set(g, a, probe(m), select);
    if m == 0 {
        // the mu = 0 tie-break already favours large a, so this only
        // happens when a.x reaches h within tolerance
        return Ok(LpSolution::from_x(indicator(k, &upper), g, a, h, Some(0.0)));
    }
    let mu_star = breaks[m - 1];
    let lower = top_set(g, a, probe(m - 1), select);
    Ok(blend(g, a, h, &lower, &upper, mu_star))
}

/// Walks from `lower` (a-sum below h) to `upper` (a-sum at least h) one
/// swap at a time and mixes the two consecutive sets that straddle `h`.
fn blend(g: &[f64], a: &[f64], h: f64, lower: &[usize], upper: &[usize], mu: f64) -> LpSolution {
    let k = g.len();
    let mut leaving: Vec<usize> = lower.iter().copied().filter(|i| !upper.contains(i)).collect();
    let mut entering: Vec<usize> = upper.iter().copied().filter(|i| !lower.contains(i)).collect();
    leaving.sort_by(|&i, &j| a[i].partial_cmp(&a[j]).unwrap_or(Ordering::Equal).then(i.cmp(&j)));
    entering.sort_by(|&i, &j| a[j].partial_cmp(&a[i]).unwrap_or(Ordering::Equal).then(i.cmp(&j)));

    let mut current = indicator(k, lower);
    let mut value = set_sum(a, lower);
    for (&out, &inn) in leaving.iter().zip(&entering) {
        let next_value = value - a[out] + a[inn];
        if next_value >= h {
            // theta of the swap: value + theta (a_in - a_out) = h
            let theta = ((h - value) / (a[inn] - a[out])).clamp(0.0, 1.0);
            current[out] = 1.0 - theta;
            current[inn] = theta;
            if theta == 1.0 {
                current[out] = 0.0;
            }
            return LpSolution::from_x(current, g, a, h, Some(mu));
        }
        current[out] = 0.0;
        current[inn] = 1.0;
        value = next_value;
    }
    // floating-point slack: the full swap sequence lands within tolerance
    LpSolution::from_x(current, g, a, h, Some(mu))
}

/// Largest K accepted by [`brute_force_lp`].
pub const BRUTE_FORCE_MAX_K: usize = 8;
/// Largest K accepted by [`integer_knapsack_reference`].
pub const KNAPSACK_MAX_K: usize = 20;

/// Enumerates every vertex of the feasible polytope: coordinates fixed at 0
/// or 1 except for at most two free ones, which are determined by
/// `sum(x) = L` (one free) or by `sum(x) = L` and `a.x = h` (two free).
pub fn brute_force_lp(g: &[f64], a: &[f64], select: usize, h: f64) -> Result<LpSolution> {
    check_inputs(g, a, select)?;
    let k = g.len();
    if k > BRUTE_FORCE_MAX_K {
        return Err(Error::TooLarge {
            k,
            max: BRUTE_FORCE_MAX_K,
        });
    }
    let l = select as f64;
    let mut best: Option<Vec<f64>> = None;
    let mut best_obj = f64::NEG_INFINITY;
    let mut consider = |x: Vec<f64>| {
        let in_box = x.iter().all(|&v| (-FEAS_TOL..=1.0 + FEAS_TOL).contains(&v));
        let sums = (x.iter().sum::<f64>() - l).abs() <= 1e-9;
        if in_box && sums && dot(a, &x) >= h - 1e-9 {
            let obj = dot(g, &x);
            if obj > best_obj {
                best_obj = obj;
                best = Some(x);
            }
        }
    };

    // each coordinate: 0, 1, or free (2)
    let total = 3usize.pow(k as u32);
    for code in 0..total {
        let mut x = vec![0.0; k];
        let mut free = Vec::new();
        let mut c = code;
        for xi in x.iter_mut().enumerate() {
            match c % 3 {
                0 => {}
                1 => *xi.1 = 1.0,
                _ => free.push(xi.0),
            }
            c /= 3;
        }
        match free.as_slice() {
            [] => consider(x),
            [i] => {
                let fixed: f64 = x.iter().sum();
                x[*i] = l - fixed;
                consider(x);
            }
            [i, j] => {
                let (i, j) = (*i, *j);
                // x_i + x_j = r1,  a_i x_i + a_j x_j = r2
                let r1 = l - x.iter().sum::<f64>();
                let r2 = h - dot(a, &x);
                let det = a[j] - a[i];
                if det != 0.0 {
                    x[j] = (r2 - a[i] * r1) / det;
                    x[i] = r1 - x[j];
                    consider(x);
                }
            }
            _ => {}
        }
    }

    match best {
        Some(x) => Ok(LpSolution::from_x(x, g, a, h, None)),
        None => Err(Error::Infeasible {
            threshold: h,
            achievable: crate::types::top_sum(a, select),
        }),
    }
}

/// Best integral `L`-subset with `sum a >= h`, by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerSolution {
    pub selected: Vec<usize>,
    pub objective: f64,
}

pub fn integer_knapsack_reference(
    g: &[f64],
    a: &[f64],
    select: usize,
    h: f64,
) -> Result<IntegerSolution> {
    check_inputs(g, a, select)?;
    let k = g.len();
    if k > KNAPSACK_MAX_K {
        return Err(Error::TooLarge {
            k,
            max: KNAPSACK_MAX_K,
        });
    }
    let mut best: Option<IntegerSolution> = None;
    let mut subset: Vec<usize> = (0..select).collect();
    loop {
        if set_sum(a, &subset) >= h - FEAS_TOL {
            let objective = set_sum(g, &subset);
            if best.as_ref().is_none_or(|b| objective > b.objective) {
                best = Some(IntegerSolution {
                    selected: subset.clone(),
                    objective,
                });
            }
        }
        if !next_combination(&mut subset, k) {
            break;
        }
    }
    best.ok_or(Error::Infeasible {
        threshold: h,
        achievable: crate::types::top_sum(a, select),
    })
}

/// Advances `c` to the next `c.len()`-combination of `0..n` in
/// lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let r = c.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if c[i] < n - r + i {
            c[i] += 1;
            for j in (i + 1)..r {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: [f64; 3] = [0.9, 0.8, 0.1];
    const A: [f64; 3] = [1.0, 0.1, 0.9];

    #[test]
    fn inactive_constraint_takes_top_by_g() {
        let s = solve_constrained_lp(&G, &A, 2, 0.0).unwrap();
        assert_eq!(s.x, vec![1.0, 1.0, 0.0]);
        assert!((s.objective - 1.7).abs() < 1e-12);
        assert_eq!(s.multiplier, Some(0.0));
    }

    #[test]
    fn tight_constraint_blends_pair() {
        let s = solve_constrained_lp(&G, &A, 2, 1.5).unwrap();
        for (got, want) in s.x.iter().zip([1.0, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-12, "{:?}", s.x);
        }
        assert!((s.objective - 1.35).abs() < 1e-12);
        assert!(s.constraint_slack.abs() < 1e-12);
        assert!(s.multiplier.unwrap() > 0.0);
        assert_eq!(s.fractional_count(), 2);
    }

    #[test]
    fn infeasible_threshold() {
        assert!(matches!(
            solve_constrained_lp(&G, &G, 2, 1.8),
            Err(Error::Infeasible { .. })
        ));
        assert!(matches!(brute_force_lp(&G, &G, 2, 1.8), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn brute_force_matches_hand_instance() {
        let s = brute_force_lp(&G, &A, 2, 1.5).unwrap();
        assert!((s.objective - 1.35).abs() < 1e-12);
    }

    #[test]
    fn brute_force_forced_selection() {
        let s = brute_force_lp(&[0.3, 0.4], &[0.5, 0.6], 2, 1.0).unwrap();
        assert_eq!(s.x, vec![1.0, 1.0]);
        assert!(brute_force_lp(&[0.3, 0.4], &[0.5, 0.6], 2, 1.2).is_err());
    }

    #[test]
    fn brute_force_symmetric_objective() {
        let s = brute_force_lp(&[0.5; 3], &[0.2, 0.7, 0.4], 1, 0.0).unwrap();
        assert!((s.objective - 0.5).abs() < 1e-12);
    }

    #[test]
    fn brute_force_rejects_large_k() {
        assert!(matches!(
            brute_force_lp(&[0.1; 9], &[0.1; 9], 2, 0.0),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn integer_reference_examples() {
        let s = integer_knapsack_reference(&G, &A, 2, 1.5).unwrap();
        assert_eq!(s.selected, vec![0, 2]);
        assert!((s.objective - 1.0).abs() < 1e-12);
        let s = integer_knapsack_reference(&G, &A, 2, 0.0).unwrap();
        assert_eq!(s.selected, vec![0, 1]);
        assert!(integer_knapsack_reference(&G, &A, 2, 1.95).is_err());
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut c = vec![0, 1];
        let mut n = 1;
        while next_combination(&mut c, 5) {
            n += 1;
        }
        assert_eq!(n, 10);
    }

    #[test]
    fn scaling_g_scales_objective() {
        let s1 = solve_constrained_lp(&G, &A, 2, 1.5).unwrap();
        let g3: Vec<f64> = G.iter().map(|v| v * 3.0).collect();
        let s3 = solve_constrained_lp(&g3, &A, 2, 1.5).unwrap();
        assert!((s3.objective - 3.0 * s1.objective).abs() < 1e-12);
        for (u, v) in s1.x.iter().zip(&s3.x) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
