//! Descriptive statistics and the Kolmogorov–Smirnov distance.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::statistics::{Data, Median, Statistics};

/// Two-sided 97.5% standard normal quantile.
pub const Z_975: f64 = 1.959_963_984_540_054;

pub(crate) fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.mean())
}

pub(crate) fn sample_variance(values: &[f64]) -> Option<f64> {
    (values.len() > 1).then(|| values.variance())
}

pub(crate) fn median(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| Data::new(values.to_vec()).median())
}

/// Kolmogorov–Smirnov distance between the empirical law of `sample` and
/// the standard normal.
pub fn ks_distance_to_normal(sample: &[f64]) -> Option<f64> {
    if sample.is_empty() {
        return None;
    }
    let normal = Normal::standard();
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let distance = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = normal.cdf(x);
            (cdf - i as f64 / n).max((i + 1) as f64 / n - cdf)
        })
        .fold(0.0, f64::max);
    Some(distance)
}

/// Summary of one estimator over a group of replications.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub oracle_mean: Option<f64>,
    /// Root mean squared distance to the per-path oracle.
    pub rmse: Option<f64>,
    /// `mean(value − oracle) / mean(oracle)`.
    pub relative_bias: Option<f64>,
    /// Replications with a positive oracle, over which ratios are taken.
    pub ratio_count: usize,
    /// Replications whose oracle is zero; never divided.
    pub zero_oracle: usize,
    pub ratio_mean: Option<f64>,
    pub ratio_median: Option<f64>,
    pub ratio_variance: Option<f64>,
    /// Median of `value / n`.
    pub median_value_over_n: Option<f64>,
    /// Median of `value · kΔ`.
    pub median_value_k_delta: Option<f64>,
    /// Median of `value · Δ`.
    pub median_value_delta: Option<f64>,
}

impl GroupStats {
    pub(crate) fn from_pairs(values: &[f64], oracles: &[f64], n: usize, k: usize) -> Self {
        debug_assert_eq!(values.len(), oracles.len());
        let delta = 1.0 / n as f64;
        let errors: Vec<f64> = values.iter().zip(oracles).map(|(v, o)| v - o).collect();
        let ratios: Vec<f64> = values
            .iter()
            .zip(oracles)
            .filter(|(_, &o)| o > 0.0)
            .map(|(v, o)| v / o)
            .collect();
        let oracle_mean = mean(oracles);
        let scaled = |factor: f64| -> Vec<f64> { values.iter().map(|v| v * factor).collect() };
        Self {
            count: values.len(),
            mean: mean(values),
            sd: sample_variance(values).map(f64::sqrt),
            oracle_mean,
            rmse: mean(&errors.iter().map(|e| e * e).collect::<Vec<_>>()).map(f64::sqrt),
            relative_bias: mean(&errors)
                .zip(oracle_mean)
                .filter(|(_, o)| *o != 0.0)
                .map(|(e, o)| e / o),
            ratio_count: ratios.len(),
            zero_oracle: oracles.iter().filter(|&&o| o <= 0.0).count(),
            ratio_mean: mean(&ratios),
            ratio_median: median(&ratios),
            ratio_variance: sample_variance(&ratios),
            median_value_over_n: median(&scaled(1.0 / n as f64)),
            median_value_k_delta: median(&scaled(k as f64 * delta)),
            median_value_delta: median(&scaled(delta)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_a_single_point_at_zero_is_one_half() {
        assert!((ks_distance_to_normal(&[0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(ks_distance_to_normal(&[]).is_none());
    }

    #[test]
    fn ks_of_normal_quantiles_is_small() {
        let normal = Normal::standard();
        let n = 1000;
        let sample: Vec<f64> = (0..n)
            .map(|i| normal.inverse_cdf((i as f64 + 0.5) / n as f64))
            .collect();
        let d = ks_distance_to_normal(&sample).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-9, "{d}");
    }

    #[test]
    fn group_stats_by_hand() {
        let g = GroupStats::from_pairs(&[1.0, 3.0, 8.0], &[1.0, 2.0, 0.0], 100, 10);
        assert_eq!(g.count, 3);
        assert_eq!(g.ratio_count, 2);
        assert_eq!(g.zero_oracle, 1);
        assert_eq!(g.mean, Some(4.0));
        assert_eq!(g.ratio_median, Some(1.25));
        assert!((g.rmse.unwrap() - (65.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((g.relative_bias.unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(g.median_value_over_n, Some(0.03));
        assert!((g.median_value_k_delta.unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn empty_group_has_no_statistics() {
        let g = GroupStats::from_pairs(&[], &[], 10, 2);
        assert_eq!(g.count, 0);
        assert!(g.mean.is_none() && g.rmse.is_none() && g.ratio_median.is_none());
    }
}
