mod common;

use common::*;
use rna::problems::initial_point;
use rna::{
    gd_step, run_with_rna, Logistic, Mlp, OptimizerConfig, Problem, Quadratic, RnaConfig, RunOptions,
};

fn configurations() -> Vec<(Box<dyn Problem>, OptimizerConfig, RnaConfig)> {
    let q = Quadratic::new(20, 100.0, 0).unwrap();
    let l = Logistic::new(200, 10, 1e-3, 1).unwrap();
    let eta_l = 1.0 / l.smoothness().unwrap();
    vec![
        (Box::new(q), OptimizerConfig::gradient_descent(0.01), RnaConfig::new(10, 1e-8)),
        (
            Box::new(l),
            OptimizerConfig::gradient_descent(eta_l),
            RnaConfig::new(5, 1e-8).with_grid(vec![1e-10, 1e-6, 1e-2]),
        ),
        (
            Box::new(Mlp::new(5, 10, 200, 0).unwrap()),
            OptimizerConfig {
                eta: 0.05,
                batch_size: Some(20),
                seed: 3,
                ..OptimizerConfig::default()
            }
            .with_step_drops(&[10, 20], 0.1),
            RnaConfig::new(10, 1e-8).with_grid(vec![1e-8, 1e-4]),
        ),
    ]
}

#[test]
fn vanilla_trace_is_untouched_by_extrapolation() {
    for (problem, opt, rna_cfg) in configurations() {
        let theta0 = initial_point(problem.dim(), 5, 0.5);
        let plain = run_with_rna(problem.as_ref(), &theta0, &opt, None, 30, RunOptions::default()).unwrap();
        for flush in [false, true] {
            let options = RunOptions { flush_on_drop: flush };
            let with = run_with_rna(problem.as_ref(), &theta0, &opt, Some(&rna_cfg), 30, options).unwrap();
            assert_eq!(plain.vanilla, with.vanilla);
            assert_eq!(with.rna.len(), 30);
        }
        assert!(plain.rna.is_empty());
    }
}

#[test]
fn gradient_descent_decreases_below_two_over_l() {
    let q = Quadratic::new(20, 100.0, 2).unwrap();
    let l = q.smoothness().unwrap();
    for eta in [0.5 / l, 1.0 / l, 1.9 / l] {
        let mut theta = initial_point(20, 1, 1.0);
        for _ in 0..50 {
            let next = gd_step(&theta, &q, eta).unwrap();
            assert!(q.value(&next) <= q.value(&theta));
            theta = next;
        }
    }
}

#[test]
fn run_matches_hand_written_gradient_descent() {
    let q = Quadratic::new(8, 10.0, 4).unwrap();
    let theta0 = initial_point(8, 2, 1.0);
    let out = run_with_rna(&q, &theta0, &OptimizerConfig::gradient_descent(0.05), None, 15, RunOptions::default())
        .unwrap();
    let expected = gd_iterates(&q, &theta0, 0.05, 15);
    for (rec, theta) in out.vanilla.records.iter().zip(&expected[1..]) {
        assert_eq!(&rec.theta, theta);
    }
}

#[test]
fn extrapolation_beats_the_last_iterate_on_a_quadratic() {
    let q = Quadratic::new(20, 100.0, 0).unwrap();
    let f_star = q.optimal_value().unwrap();
    let theta0 = initial_point(20, 0, 1.0);
    let opt = OptimizerConfig::gradient_descent(1.0 / q.smoothness().unwrap());
    let out = run_with_rna(&q, &theta0, &opt, Some(&RnaConfig::new(10, 1e-8)), 60, RunOptions::default()).unwrap();
    let last = out.vanilla.records.last().unwrap();
    let hat = out.rna.last().unwrap();
    assert!(hat.objective - f_star < last.objective - f_star);
}

#[test]
fn starting_at_the_optimum_stays_flat() {
    let q = Quadratic::new(6, 10.0, 1).unwrap();
    let star = q.optimum().unwrap().to_vec();
    let f_star = q.value(&star);
    let out = run_with_rna(&q, &star, &OptimizerConfig::gradient_descent(0.05), Some(&RnaConfig::new(4, 1e-8)), 10, RunOptions::default()).unwrap();
    for (v, r) in out.vanilla.records.iter().zip(&out.rna) {
        assert!((v.objective - f_star).abs() <= 1e-14);
        assert!((r.objective - f_star).abs() <= 1e-14);
    }
}

#[test]
fn step_drops_follow_the_schedule() {
    let opt = OptimizerConfig::gradient_descent(0.1).with_step_drops(&[150, 250], 0.1);
    assert_eq!(opt.eta_at(1), 0.1);
    assert_eq!(opt.eta_at(149), 0.1);
    assert!((opt.eta_at(150) - 0.01).abs() <= 1e-15 * 0.01);
    assert!((opt.eta_at(249) - 0.01).abs() <= 1e-15 * 0.01);
    assert!((opt.eta_at(250) - 0.001).abs() <= 1e-15 * 0.001);
}

#[test]
fn adaptive_guard_never_loses_to_the_last_iterate() {
    let m = Mlp::new(5, 10, 200, 4).unwrap();
    let theta0 = initial_point(m.dim(), 4, 0.5);
    let opt = OptimizerConfig { eta: 0.05, ..OptimizerConfig::default() };
    let cfg = RnaConfig::new(10, 1e-8).with_grid(vec![1e-10, 1e-8, 1e-6, 1e-4, 1e-2]);
    let out = run_with_rna(&m, &theta0, &opt, Some(&cfg), 40, RunOptions::default()).unwrap();
    for (v, r) in out.vanilla.records.iter().zip(&out.rna) {
        assert!(r.objective <= v.objective);
    }
}
