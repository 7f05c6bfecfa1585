//! The universal estimator
//! `Vₙ = n/(l(l−1)) Σ_{i=0}^{n−k} C(k,l)⁻¹ Σ_{S ⊂ window i, |S| = l} (f(Σ_S Δ) − Σ_S f(Δ))²`,
//! where `f` of an `l`-sum is scaled with `lΔ`.

use std::time::Instant;

use super::moments;
use super::{EstimatorConfig, EstimatorKind, SubsetMethod, SubsetStrategy, VarianceReport};
use crate::accumulate::NeumaierSum;
use crate::combinations::{binomial, sample_distinct_subsets, RevolvingDoor};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream_rng};
use crate::statistics::{increments, observation_count, PowerFunction};

/// Largest per-window subset count enumerated when no budget is set.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

pub fn v_universal(observations: &[f64], cfg: &EstimatorConfig) -> Result<VarianceReport> {
    let started = Instant::now();
    let n = observation_count(observations)?;
    cfg.check_window(n)?;
    let (k, l) = (cfg.k, cfg.l);
    if l < 2 || l > k {
        return Err(Error::config(format!(
            "subset size l = {l} must satisfy 2 <= l <= k = {k}"
        )));
    }
    let f = cfg.power_function()?;
    let count = binomial(k, l);
    let method = choose_method(cfg, count)?;
    let incs = increments(observations);
    let delta = 1.0 / n as f64;

    let (window_total, per_window) = match method {
        SubsetMethod::Enumerated => (enumerate(&incs, k, l, &f, delta), count),
        SubsetMethod::SymmetricMoments => (
            moments::window_expectation_sum(&incs, k, l, &f, delta)?,
            count,
        ),
        SubsetMethod::Sampled => {
            let budget = count.map_or(cfg.subset_budget, |c| {
                c.min(cfg.subset_budget as u128) as u64
            });
            (
                sample(&incs, k, l, &f, delta, budget as usize, cfg.subset_seed),
                Some(budget as u128),
            )
        }
    };
    let value = n as f64 / (l * (l - 1)) as f64 * window_total;
    let mut report = VarianceReport::new(EstimatorKind::VUniversal, value, cfg, started);
    report.method = Some(method);
    report.subsets_per_window = per_window;
    Ok(report)
}

fn choose_method(cfg: &EstimatorConfig, count: Option<u128>) -> Result<SubsetMethod> {
    let budget = cfg.subset_budget as u128;
    let limit = if budget == 0 { ENUMERATION_LIMIT } else { budget };
    let enumerable = count.is_some_and(|c| c <= limit);
    let refused = || Error::SubsetRefused {
        k: cfg.k,
        l: cfg.l,
        count: count.unwrap_or(u128::MAX),
    };
    match cfg.strategy {
        SubsetStrategy::Auto => {
            if enumerable {
                Ok(SubsetMethod::Enumerated)
            } else if moments::moments_supported(cfg.p) {
                Ok(SubsetMethod::SymmetricMoments)
            } else if budget > 0 {
                Ok(SubsetMethod::Sampled)
            } else {
                Err(refused())
            }
        }
        SubsetStrategy::Enumerate => {
            if enumerable {
                Ok(SubsetMethod::Enumerated)
            } else {
                Err(refused())
            }
        }
        SubsetStrategy::Moments => {
            if moments::moments_supported(cfg.p) {
                Ok(SubsetMethod::SymmetricMoments)
            } else {
                Err(Error::config(format!(
                    "the closed-form subset average needs an even integer power up to {}, got p = {}",
                    moments::MOMENTS_MAX_POWER,
                    cfg.p
                )))
            }
        }
        SubsetStrategy::Sample => {
            if budget == 0 {
                Err(Error::config("subset sampling needs a positive subset budget"))
            } else {
                Ok(SubsetMethod::Sampled)
            }
        }
    }
}

/// Sum over windows of the average squared discrepancy, visiting every
/// subset in revolving-door order so each step updates the subset sums by
/// one exchange.
fn enumerate(incs: &[f64], k: usize, l: usize, f: &PowerFunction, delta: f64) -> f64 {
    let n = incs.len();
    let single_scale = f.scale(delta);
    let subset_scale = f.scale(l as f64 * delta);
    let local: Vec<f64> = incs.iter().map(|&d| single_scale * f.abs_pow(d)).collect();
    let mut total = NeumaierSum::new();
    for start in 0..=(n - k) {
        let window = &incs[start..start + k];
        let window_local = &local[start..start + k];
        let mut door = RevolvingDoor::new(k, l);
        let mut sum = NeumaierSum::new();
        let mut sum_local = NeumaierSum::new();
        for &j in door.current() {
            sum += window[j];
            sum_local += window_local[j];
        }
        let mut acc = NeumaierSum::new();
        let mut visited: u64 = 0;
        loop {
            let d = subset_scale * f.abs_pow(sum.value()) - sum_local.value();
            acc += d * d;
            visited += 1;
            match door.advance() {
                Some((out, inn)) => {
                    sum -= window[out];
                    sum += window[inn];
                    sum_local -= window_local[out];
                    sum_local += window_local[inn];
                }
                None => break,
            }
        }
        total += acc.value() / visited as f64;
    }
    total.value()
}

/// As [`enumerate`], averaging over `budget` distinct subsets drawn per
/// window from the window's own seeded stream.
fn sample(
    incs: &[f64],
    k: usize,
    l: usize,
    f: &PowerFunction,
    delta: f64,
    budget: usize,
    seed: u64,
) -> f64 {
    let n = incs.len();
    let single_scale = f.scale(delta);
    let subset_scale = f.scale(l as f64 * delta);
    let mut total = NeumaierSum::new();
    for start in 0..=(n - k) {
        let window = &incs[start..start + k];
        let mut rng = stream_rng(derive_seed(seed, start as u64), 0);
        let mut acc = NeumaierSum::new();
        for subset in sample_distinct_subsets(&mut rng, k, l, budget) {
            let mut sum = NeumaierSum::new();
            let mut sum_local = NeumaierSum::new();
            for j in subset {
                sum += window[j];
                sum_local += single_scale * f.abs_pow(window[j]);
            }
            let d = subset_scale * f.abs_pow(sum.value()) - sum_local.value();
            acc += d * d;
        }
        total += acc.value() / budget as f64;
    }
    total.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{v_hat, v_tilde};
    use crate::simulate::{simulate_path, JumpSizes, Jumps, ModelSpec};
    use crate::statistics::ScalingMode;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    fn jump_path(n: usize, seed: u64) -> Vec<f64> {
        let spec = ModelSpec::brownian(0.8, n).with_jumps(Jumps::CompoundPoisson {
            intensity: 3.0,
            sizes: JumpSizes::Gaussian { mean: 0.0, sd: 1.0 },
        });
        simulate_path(&spec, seed).unwrap().observations
    }

    #[test]
    fn pairs_reproduce_v_tilde() {
        let obs = jump_path(120, 4);
        for (p, mode) in [(2.0, ScalingMode::Unscaled), (3.0, ScalingMode::Scaled), (1.5, ScalingMode::Unscaled)] {
            let cfg = EstimatorConfig::new(p, mode, 9, 2);
            let a = v_universal(&obs, &cfg).unwrap();
            assert_eq!(a.method, Some(SubsetMethod::Enumerated));
            let b = v_tilde(&obs, &cfg).unwrap();
            assert!(rel(a.value, b.value) < 1e-12, "p={p}: {} vs {}", a.value, b.value);
        }
    }

    #[test]
    fn whole_window_reproduces_v_hat() {
        let obs = jump_path(100, 9);
        for (p, mode) in [(2.0, ScalingMode::Scaled), (4.0, ScalingMode::Unscaled), (0.7, ScalingMode::Scaled)] {
            let cfg = EstimatorConfig::new(p, mode, 12, 12);
            let a = v_universal(&obs, &cfg).unwrap().value;
            let b = v_hat(&obs, &cfg).unwrap().value;
            assert!(rel(a, b) < 1e-12, "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn full_budget_sampling_matches_enumeration() {
        let obs = jump_path(60, 1);
        let cfg = EstimatorConfig::new(3.0, ScalingMode::Unscaled, 8, 3);
        let exact = v_universal(&obs, &cfg).unwrap();
        let sampled = v_universal(
            &obs,
            &cfg.with_budget(56, 17).with_strategy(SubsetStrategy::Sample),
        )
        .unwrap();
        assert!(sampled.sampled());
        assert!(rel(exact.value, sampled.value) < 1e-12);
    }

    #[test]
    fn partial_sampling_is_seeded() {
        let obs = jump_path(60, 2);
        let cfg = EstimatorConfig::new(3.0, ScalingMode::Unscaled, 10, 4).with_budget(20, 5);
        let a = v_universal(&obs, &cfg).unwrap();
        let b = v_universal(&obs, &cfg).unwrap();
        assert_eq!(a.method, Some(SubsetMethod::Sampled));
        assert_eq!(a.subsets_per_window, Some(20));
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let c = v_universal(&obs, &cfg.with_budget(20, 6)).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn subset_larger_than_window_is_a_config_error() {
        let obs = jump_path(40, 3);
        let cfg = EstimatorConfig::new(2.0, ScalingMode::Unscaled, 5, 6);
        assert!(matches!(v_universal(&obs, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn oversized_enumeration_is_refused() {
        let obs = jump_path(200, 3);
        let cfg = EstimatorConfig::new(3.0, ScalingMode::Unscaled, 40, 10);
        match v_universal(&obs, &cfg) {
            Err(Error::SubsetRefused { count, .. }) => assert_eq!(count, 847_660_528),
            other => panic!("expected refusal, got {other:?}"),
        }
        let forced = cfg.with_strategy(SubsetStrategy::Enumerate);
        assert!(matches!(v_universal(&obs, &forced), Err(Error::SubsetRefused { .. })));
    }

    #[test]
    fn even_powers_switch_to_the_closed_form() {
        let obs = jump_path(400, 3);
        let cfg = EstimatorConfig::new(4.0, ScalingMode::Unscaled, 40, 10);
        let report = v_universal(&obs, &cfg).unwrap();
        assert_eq!(report.method, Some(SubsetMethod::SymmetricMoments));
        assert!(report.value > 0.0);
    }
}
