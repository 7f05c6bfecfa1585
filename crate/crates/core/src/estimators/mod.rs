//! Estimators of the conditional variance of power variations.
//!
//! Every estimator compares two local estimates of the same quantity over a
//! window of `k` consecutive increments and aggregates the squared
//! discrepancies:
//!
//! * [`v_hat`] compares the statistic of the aggregated window increment with
//!   the sum of the per-increment statistics;
//! * [`v_tilde`] does the same for every pair of increments in the window;
//! * [`v_universal`] for every `l`-subset, which interpolates between the two
//!   (`l = k` gives `v_hat`, `l = 2` gives `v_tilde`).
//!
//! Window `i ∈ {0, …, n−k}` always consists of the increments
//! `Δ_{i+1}, …, Δ_{i+k}`. The baselines [`mz_estimator`] and
//! [`subsample_estimator`] live in [`baseline`].

mod baseline;
mod moments;
mod universal;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::accumulate::{NeumaierSum, SlidingSum};
use crate::error::{Error, Result};
use crate::statistics::{increments, observation_count, PowerFunction, ScalingMode};

pub use baseline::{mz_estimator, qv_baseline, subsample_estimator};
pub use moments::{moments_supported, MOMENTS_MAX_POWER};
pub use universal::{v_universal, ENUMERATION_LIMIT};

/// How the inner average over `l`-subsets of the universal estimator is
/// evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetStrategy {
    /// Enumerate when the subset count is within the limit, otherwise use the
    /// closed form when it applies, otherwise sample within the budget.
    #[default]
    Auto,
    Enumerate,
    Moments,
    Sample,
}

impl std::str::FromStr for SubsetStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(Self::Auto),
            "enumerate" => Ok(Self::Enumerate),
            "moments" => Ok(Self::Moments),
            "sample" => Ok(Self::Sample),
            other => Err(Error::config(format!("unknown subset strategy `{other}`"))),
        }
    }
}

/// Evaluation route actually taken by the universal estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetMethod {
    Enumerated,
    SymmetricMoments,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub p: f64,
    pub mode: ScalingMode,
    /// Window length `k` in increments.
    pub k: usize,
    /// Subset size `l` of the universal estimator.
    pub l: usize,
    /// Maximum number of subsets per window; 0 means exact evaluation only.
    pub subset_budget: u64,
    pub subset_seed: u64,
    pub strategy: SubsetStrategy,
}

impl EstimatorConfig {
    pub fn new(p: f64, mode: ScalingMode, k: usize, l: usize) -> Self {
        Self {
            p,
            mode,
            k,
            l,
            subset_budget: 0,
            subset_seed: 0,
            strategy: SubsetStrategy::Auto,
        }
    }

    /// `k = ⌈2√n⌉` and `l = ⌈√k⌉`.
    pub fn with_defaults(n: usize, p: f64, mode: ScalingMode) -> Self {
        let k = default_window(n);
        Self::new(p, mode, k, default_subset_size(k))
    }

    pub fn with_budget(mut self, budget: u64, seed: u64) -> Self {
        self.subset_budget = budget;
        self.subset_seed = seed;
        self
    }

    pub fn with_strategy(mut self, strategy: SubsetStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_l(mut self, l: usize) -> Self {
        self.l = l;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    /// The window must grow slower than `n` and the subset slower than the
    /// window; these are asymptotic requirements, so they only warn.
    pub fn rate_warnings(&self, n: usize) -> Vec<String> {
        let mut warnings = Vec::new();
        if self.k as f64 > (n as f64).powf(0.8) {
            warnings.push(format!(
                "window k = {} exceeds n^0.8 = {:.1}; k should be o(n)",
                self.k,
                (n as f64).powf(0.8)
            ));
        }
        if self.l as f64 > (self.k as f64).powf(0.9) {
            warnings.push(format!(
                "subset size l = {} exceeds k^0.9 = {:.1}; l should be o(k)",
                self.l,
                (self.k as f64).powf(0.9)
            ));
        }
        warnings
    }

    fn power_function(&self) -> Result<PowerFunction> {
        PowerFunction::new(self.p, self.mode)
    }

    fn check_window(&self, n: usize) -> Result<()> {
        if self.k < 2 || 2 * self.k > n {
            return Err(Error::OutOfRange(format!(
                "window k = {} must satisfy 2 <= k <= n/2 with n = {n}",
                self.k
            )));
        }
        Ok(())
    }
}

pub fn default_window(n: usize) -> usize {
    (2.0 * (n as f64).sqrt()).ceil() as usize
}

pub fn default_subset_size(k: usize) -> usize {
    ((k as f64).sqrt().ceil() as usize).max(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    VHat,
    VTilde,
    VUniversal,
    /// `n Tₙ`, the linear combination of two block-difference statistics.
    MzBaseline,
    /// Subsampling estimator `Σ̂ₙ`.
    Subsample,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::VHat,
        EstimatorKind::VTilde,
        EstimatorKind::VUniversal,
        EstimatorKind::MzBaseline,
        EstimatorKind::Subsample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::VHat => "v_hat",
            EstimatorKind::VTilde => "v_tilde",
            EstimatorKind::VUniversal => "v_universal",
            EstimatorKind::MzBaseline => "mz_nt",
            EstimatorKind::Subsample => "subsample",
        }
    }

    /// Whether the estimator uses the subset size `l`.
    pub fn uses_subsets(self) -> bool {
        self == EstimatorKind::VUniversal
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown estimator `{s}` (expected one of v_hat, v_tilde, v_universal, \
                     mz_nt, subsample)"
                ))
            })
    }
}

/// Value of one estimator on one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub estimator: EstimatorKind,
    pub value: f64,
    pub config: EstimatorConfig,
    pub path_seed: Option<u64>,
    pub elapsed: Duration,
    /// Route taken by the universal estimator.
    pub method: Option<SubsetMethod>,
    /// Subsets averaged per window by the universal estimator.
    pub subsets_per_window: Option<u128>,
}

impl VarianceReport {
    fn new(estimator: EstimatorKind, value: f64, config: &EstimatorConfig, started: Instant) -> Self {
        Self {
            estimator,
            value,
            config: *config,
            path_seed: None,
            elapsed: started.elapsed(),
            method: None,
            subsets_per_window: None,
        }
    }

    pub fn sampled(&self) -> bool {
        self.method == Some(SubsetMethod::Sampled)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.path_seed = Some(seed);
        self
    }
}

/// Runs the chosen estimator on a sequence of observations.
pub fn estimate(
    kind: EstimatorKind,
    observations: &[f64],
    cfg: &EstimatorConfig,
) -> Result<VarianceReport> {
    match kind {
        EstimatorKind::VHat => v_hat(observations, cfg),
        EstimatorKind::VTilde => v_tilde(observations, cfg),
        EstimatorKind::VUniversal => v_universal(observations, cfg),
        EstimatorKind::MzBaseline => mz_estimator(observations, cfg),
        EstimatorKind::Subsample => subsample_estimator(observations, cfg),
    }
}

/// `V̂ₙ = n/(k(k−1)) Σ_{i=0}^{n−k} (U_{[iΔ,(i+k)Δ]} − θ̂_{[iΔ,(i+k)Δ]})²`.
///
/// The block sum `θ̂` slides over the increments in `O(n)` total.
pub fn v_hat(observations: &[f64], cfg: &EstimatorConfig) -> Result<VarianceReport> {
    let started = Instant::now();
    let n = observation_count(observations)?;
    cfg.check_window(n)?;
    let f = cfg.power_function()?;
    let k = cfg.k;
    let delta = 1.0 / n as f64;
    let single_scale = f.scale(delta);
    let block_scale = f.scale(k as f64 * delta);

    let local: Vec<f64> = increments(observations)
        .into_iter()
        .map(|d| f.abs_pow(d))
        .collect();
    let mut theta = SlidingSum::new(&local[..k]);
    let mut acc = NeumaierSum::new();
    for i in 0..=(n - k) {
        if i > 0 {
            theta.slide(local[i - 1], local[i + k - 1]);
        }
        let block = block_scale * f.abs_pow(observations[i + k] - observations[i]);
        let diff = block - single_scale * theta.value();
        acc += diff * diff;
    }
    let value = n as f64 / (k * (k - 1)) as f64 * acc.value();
    Ok(VarianceReport::new(EstimatorKind::VHat, value, cfg, started))
}

/// `Ṽₙ = n/2 Σ_{i=0}^{n−k} C(k,2)⁻¹ Σ_{u<v in window i} (f(Δᵤ+Δᵥ) − f(Δᵤ) − f(Δᵥ))²`,
/// where `f` of a pair sum is scaled with `2Δ`.
///
/// The pair sum of a window is maintained incrementally: when the window
/// slides, the pairs of the leaving increment are removed and the pairs of
/// the entering one added. Each pair term is evaluated once, when its later
/// increment enters, and credited to its earlier increment for removal.
pub fn v_tilde(observations: &[f64], cfg: &EstimatorConfig) -> Result<VarianceReport> {
    let started = Instant::now();
    let n = observation_count(observations)?;
    cfg.check_window(n)?;
    let f = cfg.power_function()?;
    let k = cfg.k;
    let delta = 1.0 / n as f64;
    let pair_scale = f.scale(2.0 * delta);
    let single_scale = f.scale(delta);

    let incs = increments(observations);
    let local: Vec<f64> = incs.iter().map(|&d| single_scale * f.abs_pow(d)).collect();
    let pair_term = |u: usize, v: usize| {
        let d = pair_scale * f.abs_pow(incs[u] + incs[v]) - local[u] - local[v];
        d * d
    };

    // leaving[u] collects the pairs (u, v), v > u, of the current window.
    let mut leaving = vec![NeumaierSum::new(); n];
    let mut window = NeumaierSum::new();
    for v in 0..k {
        for u in 0..v {
            let g = pair_term(u, v);
            window += g;
            leaving[u] += g;
        }
    }
    let mut total = NeumaierSum::new();
    total += window.value();
    for i in 0..(n - k) {
        window -= leaving[i].value();
        let entering = i + k;
        for u in (i + 1)..entering {
            let g = pair_term(u, entering);
            window += g;
            leaving[u] += g;
        }
        total += window.value();
    }
    let value = n as f64 / (k * (k - 1)) as f64 * total.value();
    Ok(VarianceReport::new(EstimatorKind::VTilde, value, cfg, started))
}
