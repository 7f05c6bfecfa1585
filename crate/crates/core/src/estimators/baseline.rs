//! Block-difference and subsampling estimators built for continuous paths.

use std::time::Instant;

use super::{EstimatorConfig, EstimatorKind, VarianceReport};
use crate::accumulate::{NeumaierSum, SlidingSum};
use crate::error::{Error, Result};
use crate::statistics::{increments, observation_count, PowerFunction, ScalingMode};

/// `QVₙ(k) = k⁻¹ Σ_{i=k}^{n−k} (θ̂_{[(i−k)Δ,iΔ]} − θ̂_{[iΔ,(i+k)Δ]})²`.
pub fn qv_baseline(observations: &[f64], p: f64, mode: ScalingMode, k: usize) -> Result<f64> {
    let n = observation_count(observations)?;
    if k == 0 || 2 * k > n {
        return Err(Error::OutOfRange(format!(
            "block length k = {k} needs 1 <= k and 2k <= n = {n}"
        )));
    }
    let f = PowerFunction::new(p, mode)?;
    let scale = f.scale(1.0 / n as f64);
    let local: Vec<f64> = increments(observations)
        .into_iter()
        .map(|d| f.abs_pow(d))
        .collect();

    // blocks[a] = θ̂ over increments a+1..=a+k.
    let mut blocks = Vec::with_capacity(n - k + 1);
    let mut window = SlidingSum::new(&local[..k]);
    blocks.push(scale * window.value());
    for a in 1..=(n - k) {
        window.slide(local[a - 1], local[a + k - 1]);
        blocks.push(scale * window.value());
    }
    let mut acc = NeumaierSum::new();
    for i in k..=(n - k) {
        let d = blocks[i - k] - blocks[i];
        acc += d * d;
    }
    Ok(acc.value() / k as f64)
}

/// `n Tₙ` with `Tₙ = ⅔ (QVₙ(k) − ¼ QVₙ(2k))`.
pub fn mz_estimator(observations: &[f64], cfg: &EstimatorConfig) -> Result<VarianceReport> {
    let started = Instant::now();
    let n = observation_count(observations)?;
    if cfg.k == 0 || 4 * cfg.k > n {
        return Err(Error::OutOfRange(format!(
            "window k = {} needs 4k <= n = {n}",
            cfg.k
        )));
    }
    let single = qv_baseline(observations, cfg.p, cfg.mode, cfg.k)?;
    let double = qv_baseline(observations, cfg.p, cfg.mode, 2 * cfg.k)?;
    let value = n as f64 * (2.0 / 3.0) * (single - 0.25 * double);
    Ok(VarianceReport::new(EstimatorKind::MzBaseline, value, cfg, started))
}

/// `Σ̂ₙ = k⁻¹ Σ_{l=1}^{k} (kΔ)⁻¹ (U_lⁿ − Uₙ)²` with the subsampled statistics
/// `U_lⁿ = k Σ_{i=1}^{⌊n/k⌋} f(Δ_{(i−1)k+l})`.
pub fn subsample_estimator(observations: &[f64], cfg: &EstimatorConfig) -> Result<VarianceReport> {
    let started = Instant::now();
    let n = observation_count(observations)?;
    let k = cfg.k;
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!(
            "subsampling step k = {k} needs 1 <= k <= n = {n}"
        )));
    }
    let f = PowerFunction::new(cfg.p, cfg.mode)?;
    let delta = 1.0 / n as f64;
    let scale = f.scale(delta);
    let local: Vec<f64> = increments(observations)
        .into_iter()
        .map(|d| scale * f.abs_pow(d))
        .collect();
    let full: f64 = local.iter().copied().sum::<NeumaierSum>().value();
    let blocks = n / k;
    let mut acc = NeumaierSum::new();
    for offset in 0..k {
        let sub: f64 = (0..blocks)
            .map(|i| local[i * k + offset])
            .sum::<NeumaierSum>()
            .value();
        let d = k as f64 * sub - full;
        acc += d * d;
    }
    let value = acc.value() / (k as f64 * k as f64 * delta);
    Ok(VarianceReport::new(EstimatorKind::Subsample, value, cfg, started))
}
