//! Monte Carlo experiments.
//!
//! Replication `r` simulates its path from `derive_seed(master_seed, r)`, so
//! every replication is a pure function of the experiment and its index.
//! Replications may run in parallel; aggregation always walks them in index
//! order, which makes serial and parallel runs bitwise identical.

mod failure;
mod summary;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorConfig, EstimatorKind};
use crate::seed::{derive_seed, stream_rng};
use crate::simulate::{
    power_variation_limit, simulate_path, true_variance, ModelSpec, Regime, SimulatedPath,
};
use crate::statistics::{c_p_constant, power_variation, CpConstant};

pub use failure::{run_failure_demo, FailureDemoSpec, FailureRow};
pub use summary::{ks_distance_to_normal, GroupStats, Z_975};

/// Quadrature order used for `c_p` oracles.
pub const CP_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub config: EstimatorConfig,
    pub label: String,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind, config: EstimatorConfig) -> Self {
        Self {
            kind,
            config,
            label: kind.name().to_string(),
        }
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outputs {
    pub summary: bool,
    pub replications: bool,
    pub standardized: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            summary: true,
            replications: false,
            standardized: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model: ModelSpec,
    pub estimators: Vec<EstimatorSpec>,
    pub replications: usize,
    pub master_seed: u64,
    pub regime: Regime,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

fn default_parallel() -> bool {
    true
}

impl ExperimentSpec {
    pub fn new(model: ModelSpec, regime: Regime, replications: usize, master_seed: u64) -> Self {
        Self {
            model,
            estimators: Vec::new(),
            replications,
            master_seed,
            regime,
            outputs: Outputs::default(),
            parallel: true,
        }
    }

    pub fn with_estimator(mut self, kind: EstimatorKind, config: EstimatorConfig) -> Self {
        self.estimators.push(EstimatorSpec::new(kind, config));
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn with_outputs(mut self, outputs: Outputs) -> Self {
        self.outputs = outputs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::config("at least one replication is required"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("no estimators requested"));
        }
        self.model.validate()
    }

    /// Mismatches between the regime and the estimators' powers or scaling
    /// modes. These are legitimate explorations, so they only warn.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for e in &self.estimators {
            if e.config.p != self.regime.power() {
                out.push(format!(
                    "{}: power {} differs from the regime's {}",
                    e.label,
                    e.config.p,
                    self.regime.power()
                ));
            }
            if e.config.mode != self.regime.natural_mode() {
                out.push(format!(
                    "{}: {} scaling differs from the regime's {}",
                    e.label,
                    e.config.mode,
                    self.regime.natural_mode()
                ));
            }
            out.extend(e.config.rate_warnings(self.model.n).into_iter().map(|w| format!("{}: {w}", e.label)));
        }
        out
    }
}

/// One estimator on one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub value: f64,
    /// The variance the estimator targets on this path.
    pub oracle: f64,
    /// `Δ^{−1/2}(Uₙ − U)/√value`, when the estimator's power matches the regime
    /// and the value is positive.
    pub standardized: Option<f64>,
    /// The same statistic with the oracle in place of the estimate.
    pub oracle_standardized: Option<f64>,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    pub jump_count: usize,
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub label: String,
    pub kind: EstimatorKind,
    pub config: EstimatorConfig,
    pub all: GroupStats,
    pub jump_paths: GroupStats,
    pub continuous_paths: GroupStats,
    /// Replications entering the standardized sample.
    pub standardized_count: usize,
    /// Replications left out of the standardized sample: non-positive
    /// estimate, or no jump in a jump-power regime.
    pub standardized_excluded: usize,
    pub ks_distance: Option<f64>,
    pub oracle_ks_distance: Option<f64>,
    /// Share of nominal 95% intervals `Uₙ ± 1.96 √(Δ · value)` covering `U`.
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub n: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub regime: Regime,
    pub jump_paths: usize,
    pub estimators: Vec<EstimatorSummary>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub summary: McSummary,
    /// Per-replication rows, kept when requested.
    pub records: Vec<ReplicationRecord>,
}

impl McReport {
    /// Standardized sample of estimator `index`, in replication order.
    pub fn standardized_sample(&self, index: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.outcomes[index].standardized)
            .collect()
    }
}

/// Target of each estimator: Ṽₙ converges to `c_p ∫σ^{2p}` on continuous
/// paths, everything else to the regime's conditional variance.
struct Oracles {
    tilde_constant: Option<CpConstant>,
}

impl Oracles {
    fn new(spec: &ExperimentSpec) -> Result<Self> {
        let tilde_constant = match spec.regime {
            Regime::ContinuousPower(p) if spec.estimators.iter().any(|e| e.kind == EstimatorKind::VTilde) => {
                Some(c_p_constant(p, CP_ORDER)?)
            }
            _ => None,
        };
        Ok(Self { tilde_constant })
    }

    fn target(&self, kind: EstimatorKind, regime: Regime, path: &SimulatedPath) -> Result<f64> {
        match (kind, regime, &self.tilde_constant) {
            (EstimatorKind::VTilde, Regime::ContinuousPower(p), Some(c)) => {
                Ok(c.value * path.integrated_sigma_power(2.0 * p))
            }
            _ => Ok(true_variance(path, regime)?.total),
        }
    }
}

fn run_replication(spec: &ExperimentSpec, oracles: &Oracles, index: usize) -> Result<ReplicationRecord> {
    let seed = derive_seed(spec.master_seed, index as u64);
    let path = simulate_path(&spec.model, seed)?;
    let obs = &path.observations;
    let delta = path.delta();
    let limit = power_variation_limit(&path, spec.regime)?;
    let clt_applies = !matches!(spec.regime, Regime::JumpPower(_)) || path.jump_count() > 0;
    let mut outcomes = Vec::with_capacity(spec.estimators.len());
    for e in &spec.estimators {
        let mut cfg = e.config;
        cfg.subset_seed = derive_seed(cfg.subset_seed, seed);
        let report = estimate(e.kind, obs, &cfg)?;
        let oracle = oracles.target(e.kind, spec.regime, &path)?;
        let (standardized, oracle_standardized) = if cfg.p == spec.regime.power() && clt_applies {
            let u = power_variation(obs, cfg.p, cfg.mode)?;
            let stat = |v: f64| (v > 0.0).then(|| (u - limit) / (delta * v).sqrt());
            (stat(report.value), stat(oracle))
        } else {
            (None, None)
        };
        outcomes.push(Outcome {
            value: report.value,
            oracle,
            standardized,
            oracle_standardized,
            elapsed_ms: report.elapsed.as_secs_f64() * 1e3,
        });
    }
    Ok(ReplicationRecord {
        replication: index,
        seed,
        jump_count: path.jump_count(),
        outcomes,
    })
}

/// Simulates every replication and returns the records in index order.
pub fn run_replications(spec: &ExperimentSpec) -> Result<Vec<ReplicationRecord>> {
    spec.validate()?;
    let oracles = Oracles::new(spec)?;
    let one = |index: usize| {
        run_replication(spec, &oracles, index).map_err(|source| Error::Replication {
            index,
            source: Box::new(source),
        })
    };
    if spec.parallel {
        (0..spec.replications).into_par_iter().map(one).collect()
    } else {
        (0..spec.replications).map(one).collect()
    }
}

/// Aggregates records, which must be in replication order.
pub fn summarize(spec: &ExperimentSpec, records: &[ReplicationRecord]) -> McSummary {
    let n = spec.model.n;
    let estimators = spec
        .estimators
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let group = |keep: &dyn Fn(&ReplicationRecord) -> bool| {
                let (values, oracles): (Vec<f64>, Vec<f64>) = records
                    .iter()
                    .filter(|r| keep(r))
                    .map(|r| (r.outcomes[i].value, r.outcomes[i].oracle))
                    .unzip();
                GroupStats::from_pairs(&values, &oracles, n, e.config.k)
            };
            let sample: Vec<f64> = records.iter().filter_map(|r| r.outcomes[i].standardized).collect();
            let oracle_sample: Vec<f64> = records
                .iter()
                .filter_map(|r| r.outcomes[i].oracle_standardized)
                .collect();
            let covered = sample.iter().filter(|z| z.abs() <= Z_975).count();
            EstimatorSummary {
                label: e.label.clone(),
                kind: e.kind,
                config: e.config,
                all: group(&|_| true),
                jump_paths: group(&|r| r.jump_count > 0),
                continuous_paths: group(&|r| r.jump_count == 0),
                standardized_count: sample.len(),
                standardized_excluded: records.len() - sample.len(),
                ks_distance: ks_distance_to_normal(&sample),
                oracle_ks_distance: ks_distance_to_normal(&oracle_sample),
                coverage: (!sample.is_empty()).then(|| covered as f64 / sample.len() as f64),
            }
        })
        .collect();
    McSummary {
        n,
        replications: records.len(),
        master_seed: spec.master_seed,
        regime: spec.regime,
        jump_paths: records.iter().filter(|r| r.jump_count > 0).count(),
        estimators,
        warnings: spec.warnings(),
    }
}

/// Consistency experiment: per-path estimator values against per-path oracles.
pub fn run_consistency(spec: &ExperimentSpec) -> Result<McReport> {
    let records = run_replications(spec)?;
    let summary = summarize(spec, &records);
    Ok(McReport {
        summary,
        records: if spec.outputs.replications || spec.outputs.standardized {
            records
        } else {
            Vec::new()
        },
    })
}

/// Standardized statistic of estimator `index` with its KS distance to the
/// standard normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltCheck {
    pub label: String,
    pub sample: Vec<f64>,
    pub ks_distance: Option<f64>,
    pub oracle_ks_distance: Option<f64>,
    pub excluded: usize,
    pub coverage: Option<f64>,
}

pub fn run_clt_check(spec: &ExperimentSpec, index: usize) -> Result<CltCheck> {
    if index >= spec.estimators.len() {
        return Err(Error::config(format!("no estimator at position {index}")));
    }
    let records = run_replications(spec)?;
    let summary = summarize(spec, &records);
    let s = &summary.estimators[index];
    Ok(CltCheck {
        label: s.label.clone(),
        sample: records.iter().filter_map(|r| r.outcomes[index].standardized).collect(),
        ks_distance: s.ks_distance,
        oracle_ks_distance: s.oracle_ks_distance,
        excluded: s.standardized_excluded,
        coverage: s.coverage,
    })
}

/// RMSE of estimator `index` after randomly re-pairing values with the
/// oracles of other replications.
pub fn shuffled_rmse(records: &[ReplicationRecord], index: usize, seed: u64) -> Option<f64> {
    let values: Vec<f64> = records.iter().map(|r| r.outcomes[index].value).collect();
    let mut oracles: Vec<f64> = records.iter().map(|r| r.outcomes[index].oracle).collect();
    oracles.shuffle(&mut stream_rng(seed, 0));
    let squared: Vec<f64> = values.iter().zip(&oracles).map(|(v, o)| (v - o) * (v - o)).collect();
    summary::mean(&squared).map(f64::sqrt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::ScalingMode;

    fn small_spec() -> ExperimentSpec {
        let n = 400;
        let cfg = EstimatorConfig::with_defaults(n, 2.0, ScalingMode::Unscaled);
        let mut spec = ExperimentSpec::new(ModelSpec::brownian_plus_poisson(1.0, 2.0, n), Regime::Quadratic, 24, 7);
        for kind in EstimatorKind::ALL {
            spec = spec.with_estimator(kind, cfg);
        }
        spec
    }

    #[test]
    fn serial_and_parallel_agree_bitwise() {
        let spec = small_spec();
        let a = run_consistency(&spec.clone().with_parallel(false)).unwrap();
        let b = run_consistency(&spec.with_parallel(true)).unwrap();
        assert_eq!(format!("{:?}", a.summary), format!("{:?}", b.summary));
    }

    #[test]
    fn replication_seeds_do_not_depend_on_count() {
        let mut spec = small_spec().with_outputs(Outputs { replications: true, ..Outputs::default() });
        let long = run_consistency(&spec).unwrap();
        spec.replications = 5;
        let short = run_consistency(&spec).unwrap();
        let timeless = |records: &[ReplicationRecord]| {
            let mut out = records.to_vec();
            for r in &mut out {
                for o in &mut r.outcomes {
                    o.elapsed_ms = 0.0;
                }
            }
            out
        };
        assert_eq!(timeless(&short.records), timeless(&long.records[..5]));
    }

    #[test]
    fn errors_name_the_replication() {
        let mut spec = small_spec();
        spec.estimators[0].config.k = 1000;
        match run_replications(&spec) {
            Err(Error::Replication { index: 0, source }) => {
                assert!(matches!(*source, Error::OutOfRange(_)))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_experiments_are_rejected() {
        let mut spec = small_spec();
        spec.replications = 0;
        assert!(matches!(run_replications(&spec), Err(Error::Config(_))));
        let spec = ExperimentSpec::new(ModelSpec::brownian(1.0, 100), Regime::Quadratic, 3, 1);
        assert!(matches!(run_replications(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn zero_jump_paths_are_not_standardized_in_jump_regimes() {
        let n = 200;
        let cfg = EstimatorConfig::with_defaults(n, 4.0, ScalingMode::Unscaled);
        let spec = ExperimentSpec::new(
            ModelSpec::brownian_plus_poisson(1.0, 0.5, n),
            Regime::JumpPower(4.0),
            40,
            3,
        )
        .with_estimator(EstimatorKind::VTilde, cfg)
        .with_outputs(Outputs { replications: true, ..Outputs::default() });
        let report = run_consistency(&spec).unwrap();
        let s = &report.summary.estimators[0];
        let zero = report.records.iter().filter(|r| r.jump_count == 0).count();
        assert!(zero > 0);
        assert_eq!(s.standardized_excluded, zero);
        assert_eq!(s.jump_paths.zero_oracle, 0);
        assert_eq!(s.continuous_paths.zero_oracle, zero);
        assert_eq!(s.continuous_paths.ratio_count, 0);
    }

    #[test]
    fn warnings_flag_mismatched_regimes() {
        let cfg = EstimatorConfig::with_defaults(100, 3.0, ScalingMode::Scaled);
        let spec = ExperimentSpec::new(ModelSpec::brownian(1.0, 100), Regime::Quadratic, 1, 1)
            .with_estimator(EstimatorKind::VHat, cfg);
        assert_eq!(spec.warnings().len(), 2);
    }
}
