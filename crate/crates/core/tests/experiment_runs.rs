use linksel_core::environment::NestedLevelSpec;
use linksel_core::trace::check_records;
use linksel_core::{
    solve_constrained_lp, Algorithm, ArmPool, Experiment, ProblemSpec, RevenueModel,
};

fn heterogeneous_pool() -> ArmPool {
    let a: Vec<f64> = (0..12).map(|i| 0.1 + 0.07 * i as f64).collect();
    let b: Vec<f64> = a.iter().map(|x| 1.0 - x).collect();
    ArmPool::new(a, b).unwrap()
}

#[test]
fn uniform_regret_follows_the_linear_envelope() {
    let pool = heterogeneous_pool();
    let (l, h, t) = (3usize, 1.8, 5000u64);
    let g = pool.mean_compound();
    let best = solve_constrained_lp(&g, pool.mean_ctr(), l, h).unwrap().objective;
    let uniform = l as f64 / g.len() as f64 * g.iter().sum::<f64>();
    let envelope = t as f64 * (best - uniform);

    let spec = ProblemSpec::new(l, h, t).unwrap();
    let exp = Experiment::new(Algorithm::Uniform, pool, spec, RevenueModel::Stationary, 3).unwrap();
    let runs = 8;
    let mean: f64 = (0..runs)
        .map(|r| exp.run_replica(r).unwrap().last().unwrap().regret)
        .sum::<f64>()
        / runs as f64;
    assert!((mean / envelope - 1.0).abs() < 0.2, "{mean} vs {envelope}");
}

#[test]
fn nested_revenue_runs_cleanly() {
    let pool = heterogeneous_pool();
    let frames: Vec<NestedLevelSpec> = (0..pool.len())
        .map(|i| {
            let kids = ArmPool::new(
                vec![0.3 + 0.02 * i as f64, 0.6, 0.2],
                vec![0.5, 0.2 + 0.05 * i as f64, 0.9],
            )
            .unwrap();
            NestedLevelSpec::new(kids, 2, 0.0).unwrap()
        })
        .collect();
    let spec = ProblemSpec::new(3, 1.5, 600).unwrap();
    for alg in [Algorithm::Lexp, Algorithm::Cucb2] {
        let exp = Experiment::new(alg, pool.clone(), spec, RevenueModel::Nested(frames.clone()), 8).unwrap();
        let trace = exp.run_replica(0).unwrap();
        assert_eq!(trace.len(), 6);
        assert!(check_records(&trace).is_empty());
        assert_eq!(trace, exp.run_replica(0).unwrap());
    }
}

#[test]
fn summary_and_traces_written_per_replica() {
    let dir = tempfile::tempdir().unwrap();
    let arms = dir.path().join("arms.csv");
    linksel_core::io::write_arm_pool_file(&arms, &heterogeneous_pool()).unwrap();
    let cfg = linksel_core::PartialConfig {
        algorithm: Some(Algorithm::Exp3m1),
        select: Some(3),
        threshold: Some(1.0),
        horizon: Some(250),
        replicas: Some(4),
        arms: Some(arms),
        out: Some(dir.path().join("out")),
        ..Default::default()
    }
    .resolve()
    .unwrap();
    let summary = linksel_core::run_experiment(&cfg).unwrap();
    assert_eq!(summary.failures(), 0);
    assert_eq!(summary.trace_paths.len(), 4);
    let text = std::fs::read_to_string(&summary.summary_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 4 + 2);
    assert!(lines[5].starts_with("mean,,,250,"));
    assert!(lines[6].starts_with("std,,,0,"));
}
