//! End-to-end statistical behavior of the algorithms at Monte Carlo scale:
//! recovery on easy instances, allocation balance, and error-rate
//! monotonicity in the budget.

use bai_core::engine::{run, AlgorithmSpec, GnaParams};
use bai_core::harness::{
    run_experiment, AlgorithmConfig, AlgorithmKind, ExperimentConfig, InstanceConfig,
    SCHEMA_VERSION,
};
use bai_core::model::{make_gaussian_instance, RngStream};

#[test]
fn gna_recovers_best_arm_on_easy_instance() {
    let inst = make_gaussian_instance(&[1.0, 0.5], &[1.0, 1.0]).unwrap();
    let params = GnaParams {
        w_min: 0.05,
        ..GnaParams::default()
    };
    let trials = 1000u64;
    let mut hits = 0u64;
    for trial in 0..trials {
        let mut rng = RngStream::new(11, trial);
        let out = run(&AlgorithmSpec::Gna(params), &inst, 500, &mut rng).unwrap();
        hits += u64::from(out.recommended == 0);
    }
    let recovery = hits as f64 / trials as f64;
    assert!(recovery >= 0.95, "recovery {recovery}");
}

#[test]
fn uniform_allocation_is_balanced() {
    let inst = make_gaussian_instance(&[1.0, 0.8, 0.8], &[2.0, 1.0, 1.0]).unwrap();
    let t_budget = 3000usize;
    let trials = 200u64;
    let mut sums = [0u64; 3];
    for trial in 0..trials {
        let mut rng = RngStream::new(13, trial);
        let out = run(&AlgorithmSpec::Uniform, &inst, t_budget, &mut rng).unwrap();
        for (s, &n) in sums.iter_mut().zip(&out.counts) {
            *s += n;
        }
    }
    for &s in &sums {
        let frac = s as f64 / (t_budget as f64 * trials as f64);
        // 1/3 plus Monte Carlo slack.
        assert!((0.31..=0.36).contains(&frac), "fraction {frac}");
    }
}

#[test]
fn successive_rejects_nails_a_huge_gap() {
    let inst = make_gaussian_instance(&[5.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
    let trials = 500u64;
    let mut errors = 0u64;
    for trial in 0..trials {
        let mut rng = RngStream::new(17, trial);
        let out = run(&AlgorithmSpec::SuccessiveRejects, &inst, 200, &mut rng).unwrap();
        errors += u64::from(out.recommended != 0);
    }
    let rate = errors as f64 / trials as f64;
    assert!(rate <= 0.01, "error rate {rate}");
}

#[test]
fn error_rate_non_increasing_in_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        master_seed: 4242,
        trials: 1000,
        algorithms: vec![
            AlgorithmConfig::new(AlgorithmKind::Gna),
            AlgorithmConfig::new(AlgorithmKind::Uniform),
        ],
        instance: InstanceConfig::gaussian(vec![1.0, 0.9], vec![1.0, 1.0]),
        budgets: vec![500, 2000, 8000],
        output: dir.path().join("r.csv"),
    };
    let summary = run_experiment(&cfg).unwrap();
    for kind in ["GNA", "Uniform"] {
        let cells: Vec<_> = summary
            .cells
            .iter()
            .filter(|c| c.algorithm == kind)
            .collect();
        assert_eq!(cells.len(), 3);
        for pair in cells.windows(2) {
            let slack = 2.0 * (pair[0].se * pair[0].se + pair[1].se * pair[1].se).sqrt();
            assert!(
                pair[1].p_hat <= pair[0].p_hat + slack,
                "{kind}: p_hat rose from {} (T={}) to {} (T={})",
                pair[0].p_hat,
                pair[0].t,
                pair[1].p_hat,
                pair[1].t
            );
        }
    }
}
