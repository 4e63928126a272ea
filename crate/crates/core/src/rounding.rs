//! Dependent rounding of a fractional selection vector to exactly `L` arms.
//!
//! Each pair step takes two fractional entries `x_i`, `x_j` and moves mass
//! between them so that at least one becomes 0 or 1, keeping `x_i + x_j`
//! fixed and `E[x_i]`, `E[x_j]` unchanged. Pairs are formed by a single
//! left-to-right scan: a pending fractional entry is paired with the next
//! fractional entry found; whichever of the two stays fractional becomes the
//! pending entry. Randomness is only used for the direction coin.

use crate::error::{Error, Result};
use crate::rng::RngHandle;
use crate::types::{SelectionProbabilities, PROB_TOL};

/// Entries this close to 0 or 1 are treated as integral.
pub const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundingOutcome {
    /// Selected arm indices, ascending.
    pub selected: Vec<usize>,
    pub pair_steps: usize,
}

/// Rounds `x` to a set of exactly `select` arms with `Pr[i selected] = x_i`.
pub fn dependent_round(
    x: &SelectionProbabilities,
    select: usize,
    rng: &mut RngHandle,
) -> Result<Vec<usize>> {
    dependent_round_traced(x.as_slice(), select, rng).map(|o| o.selected)
}

/// As [`dependent_round`] on a raw slice, also reporting the pair-step count.
pub fn dependent_round_traced(
    x: &[f64],
    select: usize,
    rng: &mut RngHandle,
) -> Result<RoundingOutcome> {
    let mut work = x.to_vec();
    validate(&work, select)?;
    for v in work.iter_mut() {
        *v = snap(*v);
    }

    let mut pair_steps = 0;
    let mut pending: Option<usize> = None;
    for j in 0..work.len() {
        if !is_fractional(work[j]) {
            continue;
        }
        let Some(i) = pending else {
            pending = Some(j);
            continue;
        };
        pair_step(&mut work, i, j, rng);
        pair_steps += 1;
        pending = match (is_fractional(work[i]), is_fractional(work[j])) {
            (true, _) => Some(i),
            (false, true) => Some(j),
            (false, false) => None,
        };
    }

    if let Some(i) = pending {
        // A lone fractional entry can only come from drift in the input sum.
        let r = work[i].round();
        if (work[i] - r).abs() > PROB_TOL {
            return Err(Error::MalformedVector(format!(
                "entry {i} left fractional at {} after pairing",
                work[i]
            )));
        }
        work[i] = r;
    }

    let selected: Vec<usize> = work
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == 1.0)
        .map(|(i, _)| i)
        .collect();
    if selected.len() != select {
        return Err(Error::MalformedVector(format!(
            "rounding produced {} arms, expected {select}",
            selected.len()
        )));
    }
    Ok(RoundingOutcome {
        selected,
        pair_steps,
    })
}

fn validate(x: &[f64], select: usize) -> Result<()> {
    if x.iter().any(|v| !(-PROB_TOL..=1.0 + PROB_TOL).contains(v)) {
        return Err(Error::MalformedVector("entry outside [0, 1]".into()));
    }
    let sum: f64 = x.iter().sum();
    if (sum - select as f64).abs() > PROB_TOL {
        return Err(Error::MalformedVector(format!(
            "entries sum to {sum}, expected {select}"
        )));
    }
    Ok(())
}

fn snap(v: f64) -> f64 {
    if v <= SNAP_TOL {
        0.0
    } else if v >= 1.0 - SNAP_TOL {
        1.0
    } else {
        v
    }
}

fn is_fractional(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

/// One pair update on fractional entries `i` and `j`. Sets the entry that
/// reaches a boundary to exactly 0 or 1 and snaps the other.
fn pair_step(work: &mut [f64], i: usize, j: usize, rng: &mut RngHandle) {
    let (xi, xj) = (work[i], work[j]);
    let p = (1.0 - xi).min(xj);
    let q = xi.min(1.0 - xj);
    let total = xi + xj;
    if rng.uniform() * (p + q) < q {
        // (x_i + p, x_j - p), probability q / (p + q)
        if 1.0 - xi <= xj {
            work[i] = 1.0;
            work[j] = snap(total - 1.0);
        } else {
            work[j] = 0.0;
            work[i] = snap(total);
        }
    } else {
        // (x_i - q, x_j + q), probability p / (p + q)
        if xi <= 1.0 - xj {
            work[i] = 0.0;
            work[j] = snap(total);
        } else {
            work[j] = 1.0;
            work[i] = snap(total - 1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn freq(x: &[f64], l: usize, trials: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngHandle::new(seed);
        let mut counts = vec![0usize; x.len()];
        for _ in 0..trials {
            for i in dependent_round_traced(x, l, &mut rng).unwrap().selected {
                counts[i] += 1;
            }
        }
        counts.iter().map(|&c| c as f64 / trials as f64).collect()
    }

    #[test]
    fn integral_input_is_returned_unchanged() {
        let mut rng = RngHandle::new(0);
        let out = dependent_round_traced(&[1.0, 0.0, 1.0, 0.0], 2, &mut rng).unwrap();
        assert_eq!(out.selected, vec![0, 2]);
        assert_eq!(out.pair_steps, 0);
    }

    #[test]
    fn fair_coin_between_two_arms() {
        let f = freq(&[0.5, 0.5], 1, 100_000, 11);
        assert!((f[0] - 0.5).abs() < 0.01, "{f:?}");
        assert!((f[1] - 0.5).abs() < 0.01, "{f:?}");
    }

    #[test]
    fn certain_arm_always_selected() {
        let f = freq(&[0.2, 0.8, 1.0], 2, 100_000, 12);
        assert_eq!(f[2], 1.0);
        assert!((f[0] - 0.2).abs() < 0.01, "{f:?}");
    }

    #[test]
    fn malformed_inputs_rejected() {
        let mut rng = RngHandle::new(0);
        assert!(matches!(
            dependent_round_traced(&[0.5, 0.4], 1, &mut rng),
            Err(Error::MalformedVector(_))
        ));
        assert!(matches!(
            dependent_round_traced(&[1.5, -0.5], 1, &mut rng),
            Err(Error::MalformedVector(_))
        ));
    }

    #[test]
    fn near_integral_entries_snap() {
        let mut rng = RngHandle::new(3);
        let x = [1.0 - 1e-13, 1e-13, 0.5, 0.5];
        for _ in 0..100 {
            let out = dependent_round_traced(&x, 2, &mut rng).unwrap();
            assert!(out.selected.contains(&0));
            assert!(!out.selected.contains(&1));
            assert_eq!(out.pair_steps, 1);
        }
    }

    fn valid_vector() -> impl Strategy<Value = (Vec<f64>, usize)> {
        (2usize..12)
            .prop_flat_map(|k| (proptest::collection::vec(0.01f64..1.0, k), 1..k))
            .prop_map(|(w, l)| (water_fill(&w, l), l))
    }

    /// Scales `w` so its entries sum to `l`, capping at 1 and redistributing.
    fn water_fill(w: &[f64], l: usize) -> Vec<f64> {
        let mut x = vec![0.0; w.len()];
        let mut fixed = vec![false; w.len()];
        loop {
            let free_w: f64 = (0..w.len()).filter(|&i| !fixed[i]).map(|i| w[i]).sum();
            let remaining = l as f64 - fixed.iter().filter(|&&f| f).count() as f64;
            let mut changed = false;
            for i in 0..w.len() {
                if !fixed[i] {
                    x[i] = w[i] * remaining / free_w;
                    if x[i] >= 1.0 {
                        x[i] = 1.0;
                        fixed[i] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                return x;
            }
        }
    }

    proptest! {
        #[test]
        fn always_selects_exactly_l((x, l) in valid_vector(), seed in any::<u64>()) {
            let mut rng = RngHandle::new(seed);
            let out = dependent_round_traced(&x, l, &mut rng).unwrap();
            prop_assert_eq!(out.selected.len(), l);
            prop_assert!(out.pair_steps < x.len());
            for &i in &out.selected {
                prop_assert!(x[i] > 0.0);
            }
        }

        #[test]
        fn pair_step_conserves_sum(xi in 0.001f64..0.999, xj in 0.001f64..0.999, seed in any::<u64>()) {
            let mut w = vec![xi, xj];
            let mut rng = RngHandle::new(seed);
            pair_step(&mut w, 0, 1, &mut rng);
            prop_assert!((w[0] + w[1] - xi - xj).abs() < 1e-9);
            prop_assert!(!is_fractional(w[0]) || !is_fractional(w[1]));
        }
    }

    #[test]
    fn marginals_within_four_sigma() {
        let x = [0.3, 0.7, 0.15, 0.85, 0.5, 0.5];
        let n = 50_000;
        let f = freq(&x, 3, n, 99);
        for (xi, fi) in x.iter().zip(&f) {
            let sd = (xi * (1.0 - xi) / n as f64).sqrt();
            assert!((fi - xi).abs() <= 4.0 * sd, "{xi} vs {fi}");
        }
    }
}
