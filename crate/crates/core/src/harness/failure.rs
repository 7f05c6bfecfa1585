//! Divergence of the baselines on a Brownian motion plus a Poisson process.

use serde::{Deserialize, Serialize};

use super::{run_replications, summarize, ExperimentSpec};
use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, EstimatorKind};
use crate::simulate::{ModelSpec, Regime};
use crate::statistics::ScalingMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureDemoSpec {
    pub sigma: f64,
    pub lambda: f64,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default = "super::default_parallel")]
    pub parallel: bool,
}

impl Default for FailureDemoSpec {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            lambda: 1.0,
            n_grid: vec![1_000, 10_000, 100_000],
            replications: 200,
            master_seed: 0,
            parallel: true,
        }
    }
}

impl FailureDemoSpec {
    /// The experiment run at one grid point: quadratic variation with both
    /// baselines and both consistent estimators at default tuning.
    pub fn experiment(&self, n: usize) -> ExperimentSpec {
        let cfg = EstimatorConfig::with_defaults(n, 2.0, ScalingMode::Unscaled);
        let model = ModelSpec::brownian_plus_poisson(self.sigma, self.lambda, n);
        let mut spec = ExperimentSpec::new(model, Regime::Quadratic, self.replications, self.master_seed)
            .with_parallel(self.parallel);
        for kind in [
            EstimatorKind::MzBaseline,
            EstimatorKind::Subsample,
            EstimatorKind::VTilde,
            EstimatorKind::VUniversal,
        ] {
            spec = spec.with_estimator(kind, cfg);
        }
        spec
    }
}

/// One grid point. Divergence statistics use paths with at least one jump;
/// the `continuous_*` columns show the baselines on jump-free paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub replications: usize,
    pub jump_paths: usize,
    pub median_nt_over_n: Option<f64>,
    pub median_subsample_k_delta: Option<f64>,
    pub median_subsample_delta: Option<f64>,
    pub median_nt_ratio: Option<f64>,
    pub median_subsample_ratio: Option<f64>,
    pub median_v_tilde_ratio: Option<f64>,
    pub median_v_universal_ratio: Option<f64>,
    pub continuous_nt_ratio: Option<f64>,
    pub continuous_subsample_ratio: Option<f64>,
}

pub fn run_failure_demo(spec: &FailureDemoSpec) -> Result<Vec<FailureRow>> {
    if spec.n_grid.is_empty() {
        return Err(Error::config("the n grid is empty"));
    }
    spec.n_grid
        .iter()
        .map(|&n| {
            let experiment = spec.experiment(n);
            let records = run_replications(&experiment)?;
            let summary = summarize(&experiment, &records);
            let [nt, sub, tilde, universal] = &summary.estimators[..] else {
                unreachable!("four estimators per grid point")
            };
            Ok(FailureRow {
                n,
                k: nt.config.k,
                l: universal.config.l,
                replications: summary.replications,
                jump_paths: summary.jump_paths,
                median_nt_over_n: nt.jump_paths.median_value_over_n,
                median_subsample_k_delta: sub.jump_paths.median_value_k_delta,
                median_subsample_delta: sub.jump_paths.median_value_delta,
                median_nt_ratio: nt.jump_paths.ratio_median,
                median_subsample_ratio: sub.jump_paths.ratio_median,
                median_v_tilde_ratio: tilde.jump_paths.ratio_median,
                median_v_universal_ratio: universal.jump_paths.ratio_median,
                continuous_nt_ratio: nt.continuous_paths.ratio_median,
                continuous_subsample_ratio: sub.continuous_paths.ratio_median,
            })
        })
        .collect()
}
