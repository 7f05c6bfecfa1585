//! Power variations, local block statistics and Gaussian constants.
//!
//! All statistics operate on the observations `X_0, X_{Δ}, …, X_1` of a path
//! on the unit interval, so `n = observations.len() − 1` and `Δ = 1/n`.

mod quadrature;

pub use quadrature::GaussHermite;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::accumulate::{compensated_sum, NeumaierSum};
use crate::error::{Error, Result};

/// How an increment over an interval of length `L` is turned into a local
/// statistic: `L^{1−p/2}|x|^p` when scaled, `|x|^p` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalingMode {
    Scaled,
    Unscaled,
}

impl ScalingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScalingMode::Scaled => "scaled",
            ScalingMode::Unscaled => "unscaled",
        }
    }
}

impl std::str::FromStr for ScalingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scaled" => Ok(ScalingMode::Scaled),
            "unscaled" => Ok(ScalingMode::Unscaled),
            other => Err(Error::config(format!(
                "unknown scaling mode `{other}` (expected `scaled` or `unscaled`)"
            ))),
        }
    }
}

impl std::fmt::Display for ScalingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The function `f` applied to increments, for a fixed power and scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFunction {
    p: f64,
    mode: ScalingMode,
    integer_power: Option<i32>,
}

impl PowerFunction {
    pub fn new(p: f64, mode: ScalingMode) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::Domain(format!("power must be positive, got {p}")));
        }
        let integer_power = (p.fract() == 0.0 && p <= 64.0).then_some(p as i32);
        Ok(Self {
            p,
            mode,
            integer_power,
        })
    }

    pub fn power(&self) -> f64 {
        self.p
    }

    pub fn mode(&self) -> ScalingMode {
        self.mode
    }

    /// `|x|^p`.
    #[inline]
    pub fn abs_pow(&self, x: f64) -> f64 {
        match self.integer_power {
            Some(k) => x.abs().powi(k),
            None => x.abs().powf(self.p),
        }
    }

    /// Scale factor for an increment over an interval of the given length.
    #[inline]
    pub fn scale(&self, length: f64) -> f64 {
        match self.mode {
            ScalingMode::Scaled => length.powf(1.0 - self.p / 2.0),
            ScalingMode::Unscaled => 1.0,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        self.scale(length) * self.abs_pow(x)
    }
}

/// Increments `Δᵢⁿ X = X_{iΔ} − X_{(i−1)Δ}` for `i = 1..=n`.
pub fn increments(observations: &[f64]) -> Vec<f64> {
    observations.windows(2).map(|w| w[1] - w[0]).collect()
}

pub(crate) fn observation_count(observations: &[f64]) -> Result<usize> {
    if observations.len() < 2 {
        return Err(Error::Domain(format!(
            "a path needs at least two observations, got {}",
            observations.len()
        )));
    }
    Ok(observations.len() - 1)
}

/// `m_p = E|N|^p = 2^{p/2} Γ((p+1)/2) / √π`.
pub fn normal_abs_moment(p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Domain(format!(
            "absolute moment needs p > 0, got {p}"
        )));
    }
    let log_moment = 0.5 * p * std::f64::consts::LN_2 + ln_gamma(0.5 * (p + 1.0))
        - 0.5 * std::f64::consts::PI.ln();
    Ok(log_moment.exp())
}

/// Result of the `c_p` quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct CpConstant {
    pub value: f64,
    pub order: usize,
    /// Absolute change of the result when the quadrature order is doubled.
    pub change_on_doubling: f64,
    pub warning: Option<String>,
}

/// Tolerance on the change under order doubling before a warning is raised.
pub const CP_DOUBLING_TOLERANCE: f64 = 1e-8;

/// `c_p = 2 E[(|(N₁+N₂)/√2|^p − ½(|N₁|^p + |N₂|^p))²]` by tensor
/// Gauss–Hermite quadrature.
pub fn c_p_constant(p: f64, quadrature_order: usize) -> Result<CpConstant> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Domain(format!("c_p needs p > 0, got {p}")));
    }
    if quadrature_order < 20 {
        return Err(Error::Domain(format!(
            "quadrature order must be at least 20, got {quadrature_order}"
        )));
    }
    let value = c_p_tensor(p, quadrature_order);
    let refined = c_p_tensor(p, 2 * quadrature_order);
    let change_on_doubling = (refined - value).abs();
    let warning = (change_on_doubling >= CP_DOUBLING_TOLERANCE).then(|| {
        format!(
            "c_p quadrature for p = {p} changed by {change_on_doubling:.3e} when the order \
             was doubled from {quadrature_order}"
        )
    });
    Ok(CpConstant {
        value,
        order: quadrature_order,
        change_on_doubling,
        warning,
    })
}

fn c_p_tensor(p: f64, order: usize) -> f64 {
    let rule = GaussHermite::new(order);
    let f = PowerFunction::new(p, ScalingMode::Unscaled).expect("p validated by caller");
    let abs_pow: Vec<f64> = rule.nodes.iter().map(|&x| f.abs_pow(x)).collect();
    let mut acc = NeumaierSum::new();
    for (i, (&x1, &w1)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        for (j, (&x2, &w2)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let d = f.abs_pow((x1 + x2) / std::f64::consts::SQRT_2) - 0.5 * (abs_pow[i] + abs_pow[j]);
            acc += w1 * w2 * d * d;
        }
    }
    2.0 * acc.value()
}

/// `Uₙ = Σᵢ f(Δᵢⁿ X)` with each increment scaled by `Δ`.
pub fn power_variation(observations: &[f64], p: f64, mode: ScalingMode) -> Result<f64> {
    let n = observation_count(observations)?;
    let f = PowerFunction::new(p, mode)?;
    let delta = 1.0 / n as f64;
    let scale = f.scale(delta);
    Ok(scale * compensated_sum(observations.windows(2).map(|w| f.abs_pow(w[1] - w[0]))))
}

fn check_block(n: usize, start: usize, k: usize) -> Result<()> {
    if k == 0 || start + k > n {
        return Err(Error::OutOfRange(format!(
            "block [{start}, {}] does not fit into {n} increments",
            start + k
        )));
    }
    Ok(())
}

/// `θ̂_{[iΔ,(i+k)Δ]} = Σ_{j=1..k} f(Δ_{i+j}ⁿ X)`: the sum of the `k` local
/// statistics of the increments in the block.
pub fn block_sum_theta_hat(
    observations: &[f64],
    p: f64,
    mode: ScalingMode,
    start: usize,
    k: usize,
) -> Result<f64> {
    let n = observation_count(observations)?;
    check_block(n, start, k)?;
    let f = PowerFunction::new(p, mode)?;
    let scale = f.scale(1.0 / n as f64);
    let window = &observations[start..=start + k];
    Ok(scale * compensated_sum(window.windows(2).map(|w| f.abs_pow(w[1] - w[0]))))
}

/// `U_{[iΔ,(i+k)Δ]}`: the local statistic of the single increment
/// `X_{(i+k)Δ} − X_{iΔ}`, scaled with the block length `kΔ`.
pub fn block_increment_power(
    observations: &[f64],
    p: f64,
    mode: ScalingMode,
    start: usize,
    k: usize,
) -> Result<f64> {
    let n = observation_count(observations)?;
    check_block(n, start, k)?;
    let f = PowerFunction::new(p, mode)?;
    Ok(f.eval(
        observations[start + k] - observations[start],
        k as f64 / n as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_path(n: usize) -> Vec<f64> {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    fn step_path(n: usize, at: usize, size: f64) -> Vec<f64> {
        (0..=n).map(|i| if i >= at { size } else { 0.0 }).collect()
    }

    #[test]
    fn unit_normal_variance() {
        assert!((normal_abs_moment(2.0).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rejects_non_positive_powers() {
        assert!(matches!(normal_abs_moment(0.0), Err(Error::Domain(_))));
        assert!(matches!(normal_abs_moment(-1.0), Err(Error::Domain(_))));
        assert!(matches!(c_p_constant(0.0, 20), Err(Error::Domain(_))));
        assert!(matches!(c_p_constant(2.0, 10), Err(Error::Domain(_))));
        assert!(PowerFunction::new(f64::NAN, ScalingMode::Scaled).is_err());
    }

    #[test]
    fn c_two_is_two() {
        let c2 = c_p_constant(2.0, 20).unwrap();
        assert!((c2.value - 2.0).abs() < 1e-10, "{c2:?}");
        assert!(c2.warning.is_none());
    }

    #[test]
    fn non_smooth_integrand_is_flagged() {
        let c = c_p_constant(1.0, 20).unwrap();
        assert!(c.value > 0.0);
        assert!(c.warning.is_some());
    }

    #[test]
    fn constant_path_has_zero_power_variation() {
        let obs = vec![3.5; 51];
        for mode in [ScalingMode::Scaled, ScalingMode::Unscaled] {
            assert_eq!(power_variation(&obs, 2.0, mode).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_step_power_variation() {
        let obs = step_path(20, 7, 1.0);
        assert_eq!(power_variation(&obs, 4.0, ScalingMode::Unscaled).unwrap(), 1.0);
    }

    #[test]
    fn block_sum_of_one_increment() {
        let obs = step_path(10, 4, -2.0);
        let f = PowerFunction::new(3.0, ScalingMode::Scaled).unwrap();
        let single = f.eval(-2.0, 0.1);
        let theta = block_sum_theta_hat(&obs, 3.0, ScalingMode::Scaled, 3, 1).unwrap();
        assert!((theta - single).abs() <= 1e-15 * single.abs());
        let block = block_increment_power(&obs, 3.0, ScalingMode::Scaled, 3, 1).unwrap();
        assert!((block - single).abs() <= 1e-15 * single.abs());
    }

    #[test]
    fn disjoint_blocks_partition_the_power_variation() {
        let obs: Vec<f64> = (0..=12).map(|i| ((i * 7919) % 13) as f64 * 0.1).collect();
        let total = power_variation(&obs, 1.5, ScalingMode::Scaled).unwrap();
        let blocks: f64 = (0..4)
            .map(|b| block_sum_theta_hat(&obs, 1.5, ScalingMode::Scaled, 3 * b, 3).unwrap())
            .sum();
        assert!((total - blocks).abs() <= 1e-13 * total);
    }

    #[test]
    fn linear_path_block_statistics() {
        let n = 10;
        let delta = 0.1;
        let obs = linear_path(n);
        for k in 1..=4 {
            for i in 0..=(n - k) {
                let theta = block_sum_theta_hat(&obs, 2.0, ScalingMode::Scaled, i, k).unwrap();
                let expected = k as f64 * delta * delta;
                assert!((theta - expected).abs() <= 1e-15, "θ̂ i={i} k={k}");
                let block = block_increment_power(&obs, 2.0, ScalingMode::Scaled, i, k).unwrap();
                let expected = (k as f64 * delta).powi(2);
                assert!((block - expected).abs() <= 1e-15, "U i={i} k={k}");
            }
        }
    }

    #[test]
    fn jump_inside_block_dominates_unscaled_block_power() {
        let obs = step_path(30, 12, 1.5);
        let block = block_increment_power(&obs, 3.0, ScalingMode::Unscaled, 5, 10).unwrap();
        assert_eq!(block, 1.5_f64.powi(3));
    }

    #[test]
    fn block_index_out_of_range() {
        let obs = linear_path(10);
        assert!(matches!(
            block_sum_theta_hat(&obs, 2.0, ScalingMode::Scaled, 8, 3),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            block_increment_power(&obs, 2.0, ScalingMode::Scaled, 0, 11),
            Err(Error::OutOfRange(_))
        ));
        assert!(block_increment_power(&obs, 2.0, ScalingMode::Scaled, 0, 10).is_ok());
    }
}
