use linksel_core::oracle::{brute_force_lp, integer_knapsack_reference};
use linksel_core::types::top_sum;
use linksel_core::{solve_constrained_lp, RngHandle};
use proptest::prelude::*;

fn instance(k: usize, l: usize, rng: &mut RngHandle) -> (Vec<f64>, Vec<f64>, f64) {
    let g: Vec<f64> = (0..k).map(|_| rng.uniform()).collect();
    let a: Vec<f64> = (0..k).map(|_| rng.uniform()).collect();
    let h = rng.uniform() * top_sum(&a, l);
    (g, a, h)
}

#[test]
fn parametric_matches_vertex_enumeration() {
    let mut rng = RngHandle::with_stream(7, 0);
    for _ in 0..1000 {
        let k = 2 + (rng.uniform() * 5.0) as usize;
        let l = 1 + (rng.uniform() * k.min(3) as f64) as usize;
        let (g, a, h) = instance(k, l, &mut rng);
        let p = solve_constrained_lp(&g, &a, l, h).unwrap();
        let b = brute_force_lp(&g, &a, l, h).unwrap();
        assert!((p.objective - b.objective).abs() < 1e-9, "{g:?} {a:?} {l} {h}");
        // the returned point is feasible and attains its objective
        let sum: f64 = p.x.iter().sum();
        assert!((sum - l as f64).abs() < 1e-9);
        assert!(p.x.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        let ax: f64 = p.x.iter().zip(&a).map(|(x, a)| x * a).sum();
        assert!(ax >= h - 1e-9);
        assert!(p.fractional_count() <= 2);
    }
}

#[test]
fn relaxation_dominates_integer_reference() {
    let mut rng = RngHandle::with_stream(8, 0);
    for _ in 0..300 {
        let k = 2 + (rng.uniform() * 9.0) as usize;
        let l = 1 + (rng.uniform() * k as f64) as usize;
        let (g, a, h) = instance(k, l, &mut rng);
        let p = solve_constrained_lp(&g, &a, l, h).unwrap();
        let i = integer_knapsack_reference(&g, &a, l, h).unwrap();
        assert!(p.objective >= i.objective - 1e-12);
        let ai: f64 = i.selected.iter().map(|&j| a[j]).sum();
        assert!(ai >= h - 1e-12);
    }
}

proptest! {
    // no random feasible point beats the solver
    #[test]
    fn no_feasible_point_beats_the_optimum(
        seed in 0u64..10_000,
        k in 3usize..12,
        mix in proptest::collection::vec(0.0f64..1.0, 12),
    ) {
        let mut rng = RngHandle::with_stream(seed, 1);
        let l = 1 + (rng.uniform() * (k - 1) as f64) as usize;
        let (g, a, h) = instance(k, l, &mut rng);
        let best = solve_constrained_lp(&g, &a, l, h).unwrap();
        // blend the optimum's top-a set with a random point of the simplex slice
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| a[j].total_cmp(&a[i]));
        let mut top = vec![0.0; k];
        for &i in &order[..l] { top[i] = 1.0; }
        let w: Vec<f64> = mix[..k].iter().map(|m| m + 1e-3).collect();
        let s: f64 = w.iter().sum();
        let mut rand_x: Vec<f64> = w.iter().map(|v| v / s * l as f64).collect();
        if rand_x.iter().any(|&v| v > 1.0) { rand_x = top.clone(); }
        for theta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let x: Vec<f64> = top.iter().zip(&rand_x).map(|(t, r)| theta * r + (1.0 - theta) * t).collect();
            let ax: f64 = x.iter().zip(&a).map(|(x, a)| x * a).sum();
            if ax >= h {
                let gx: f64 = x.iter().zip(&g).map(|(x, g)| x * g).sum();
                prop_assert!(gx <= best.objective + 1e-9);
            }
        }
    }
}
