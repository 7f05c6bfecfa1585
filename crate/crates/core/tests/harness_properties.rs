use proptest::prelude::*;

use hfvar::estimators::{EstimatorConfig, EstimatorKind};
use hfvar::harness::{run_consistency, shuffled_rmse, ExperimentSpec, McReport, Outputs};
use hfvar::simulate::{JumpSizes, Jumps, ModelSpec, Regime};
use hfvar::statistics::ScalingMode;

fn jump_report(n: usize, reps: usize, seed: u64, intensity: f64) -> McReport {
    let model = ModelSpec::brownian(1.0, n).with_jumps(Jumps::CompoundPoisson {
        intensity,
        sizes: JumpSizes::Gaussian { mean: 0.0, sd: 1.0 },
    });
    let cfg = EstimatorConfig::with_defaults(n, 2.0, ScalingMode::Unscaled);
    let spec = ExperimentSpec::new(model, Regime::Quadratic, reps, seed)
        .with_estimator(EstimatorKind::VTilde, cfg)
        .with_estimator(EstimatorKind::VUniversal, cfg)
        .with_outputs(Outputs {
            replications: true,
            standardized: true,
            ..Outputs::default()
        });
    run_consistency(&spec).unwrap()
}

#[test]
fn shuffling_oracle_pairing_increases_rmse_on_jump_model() {
    let report = jump_report(2000, 200, 11, 3.0);
    for (index, est) in report.summary.estimators.iter().enumerate() {
        let rmse = est.all.rmse.unwrap();
        for seed in 0..10 {
            let shuffled = shuffled_rmse(&report.records, index, seed).unwrap();
            assert!(shuffled > rmse, "{}: shuffled {shuffled} vs paired {rmse}", est.label);
        }
    }
}

#[test]
fn identical_specs_reproduce_summaries() {
    let a = jump_report(500, 30, 5, 2.0);
    let b = jump_report(500, 30, 5, 2.0);
    assert_eq!(
        serde_json::to_string(&a.summary).unwrap(),
        serde_json::to_string(&b.summary).unwrap()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rmse_bounds_error_variance_and_coverage_is_a_fraction(
        seed in any::<u64>(),
        reps in 2usize..20,
        n in 200usize..800,
        intensity in 0.0f64..5.0,
    ) {
        let report = jump_report(n, reps, seed, intensity);
        for (index, est) in report.summary.estimators.iter().enumerate() {
            let g = &est.all;
            let (rmse, sd) = (g.rmse.unwrap(), g.sd.unwrap());
            let errors: Vec<f64> = report
                .records
                .iter()
                .map(|r| r.outcomes[index].value - r.outcomes[index].oracle)
                .collect();
            let m = errors.iter().sum::<f64>() / errors.len() as f64;
            let population = errors.iter().map(|e| (e - m).powi(2)).sum::<f64>() / errors.len() as f64;
            prop_assert!(rmse * rmse >= population * (1.0 - 1e-12) - 1e-12);
            prop_assert!(sd >= 0.0);
            if let Some(c) = est.coverage {
                prop_assert!((0.0..=1.0).contains(&c));
            }
        }
    }
}
