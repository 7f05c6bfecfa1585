//! Euler simulation of Itô semimartingales with finite-activity jumps.
//!
//! A path lives on `[0, 1]` and is observed at `iΔ`, `Δ = 1/n`. The
//! diffusion and the volatility are discretised on a fine grid with
//! `n · substeps` steps. Besides the observations, a [`SimulatedPath`] keeps
//! the hidden ground truth the oracle needs: the fine volatility path and the
//! exact jump times and sizes.
//!
//! Brownian drivers are generated coarse-to-fine. The `n` coarse increments
//! are drawn first, then refined by Brownian bridges (midpoint splits level by
//! level when `substeps` is a power of two). A fixed seed therefore yields
//! the same coarse increments for every `substeps`, and for powers of two the
//! finer path refines the coarser one.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::accumulate::NeumaierSum;
use crate::error::{Error, Result};
use crate::seed::{stream_rng, STREAM_DIFFUSION, STREAM_JUMPS, STREAM_VOLATILITY};
use crate::statistics::{normal_abs_moment, ScalingMode};

/// Drift `b(t, X, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drift {
    Constant { b: f64 },
    /// `rate · (level − X)`.
    MeanReverting { rate: f64, level: f64 },
    /// `coefficient · σ²`.
    VolatilityPremium { coefficient: f64 },
}

impl Drift {
    #[inline]
    pub fn eval(&self, _t: f64, x: f64, sigma: f64) -> f64 {
        match *self {
            Drift::Constant { b } => b,
            Drift::MeanReverting { rate, level } => rate * (level - x),
            Drift::VolatilityPremium { coefficient } => coefficient * sigma * sigma,
        }
    }
}

impl Default for Drift {
    fn default() -> Self {
        Drift::Constant { b: 0.0 }
    }
}

/// Spot volatility dynamics. Both presets are continuous and strictly
/// positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Volatility {
    Constant { sigma: f64 },
    /// `d log σ = κ (log m − log σ) dt + ξ dB` with `B` independent of `W`.
    GeometricOu {
        kappa: f64,
        long_run: f64,
        vol_of_vol: f64,
        initial: f64,
    },
}

impl Volatility {
    fn initial(&self) -> f64 {
        match *self {
            Volatility::Constant { sigma } => sigma,
            Volatility::GeometricOu { initial, .. } => initial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpSizes {
    PointMass { size: f64 },
    Gaussian { mean: f64, sd: f64 },
    /// `+size` or `−size` with probability one half each.
    TwoPoint { size: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Jumps {
    #[default]
    None,
    CompoundPoisson { intensity: f64, sizes: JumpSizes },
}

/// Full description of a simulable model and its sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub drift: Drift,
    pub vol: Volatility,
    pub jumps: Jumps,
    /// Number of observation intervals on `[0, 1]`.
    pub n: usize,
    /// Fine steps per observation interval.
    pub substeps: usize,
    pub x0: f64,
}

impl ModelSpec {
    /// `σ W_t` observed `n` times.
    pub fn brownian(sigma: f64, n: usize) -> Self {
        Self {
            drift: Drift::default(),
            vol: Volatility::Constant { sigma },
            jumps: Jumps::None,
            n,
            substeps: 1,
            x0: 0.0,
        }
    }

    /// `σ W_t + J_t` with `J` a Poisson process of intensity `lambda`.
    pub fn brownian_plus_poisson(sigma: f64, lambda: f64, n: usize) -> Self {
        Self {
            jumps: Jumps::CompoundPoisson {
                intensity: lambda,
                sizes: JumpSizes::PointMass { size: 1.0 },
            },
            ..Self::brownian(sigma, n)
        }
    }

    pub fn with_jumps(mut self, jumps: Jumps) -> Self {
        self.jumps = jumps;
        self
    }

    pub fn with_vol(mut self, vol: Volatility) -> Self {
        self.vol = vol;
        self
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be finite, got {v}")))
            }
        };
        if self.n < 2 {
            return Err(Error::config(format!("n must be at least 2, got {}", self.n)));
        }
        if self.substeps < 1 {
            return Err(Error::config("substeps must be at least 1"));
        }
        finite("x0", self.x0)?;
        match self.drift {
            Drift::Constant { b } => finite("drift b", b)?,
            Drift::MeanReverting { rate, level } => {
                finite("drift rate", rate)?;
                finite("drift level", level)?;
            }
            Drift::VolatilityPremium { coefficient } => finite("drift coefficient", coefficient)?,
        }
        match self.vol {
            Volatility::Constant { sigma } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::config(format!(
                        "volatility must be strictly positive, got {sigma}"
                    )));
                }
            }
            Volatility::GeometricOu {
                kappa,
                long_run,
                vol_of_vol,
                initial,
            } => {
                finite("kappa", kappa)?;
                finite("vol of vol", vol_of_vol)?;
                if !(long_run.is_finite() && long_run > 0.0) {
                    return Err(Error::config("long-run volatility must be positive"));
                }
                if !(initial.is_finite() && initial > 0.0) {
                    return Err(Error::config("initial volatility must be positive"));
                }
                if kappa < 0.0 || vol_of_vol < 0.0 {
                    return Err(Error::config("kappa and vol of vol must be non-negative"));
                }
            }
        }
        if let Jumps::CompoundPoisson { intensity, sizes } = self.jumps {
            if !(intensity.is_finite() && intensity >= 0.0) {
                return Err(Error::config(format!(
                    "jump intensity must be non-negative, got {intensity}"
                )));
            }
            match sizes {
                JumpSizes::PointMass { size } | JumpSizes::TwoPoint { size } => {
                    if !(size.is_finite() && size != 0.0) {
                        return Err(Error::config("jump size must be finite and non-zero"));
                    }
                }
                JumpSizes::Gaussian { mean, sd } => {
                    finite("jump mean", mean)?;
                    if !(sd.is_finite() && sd >= 0.0) || (sd == 0.0 && mean == 0.0) {
                        return Err(Error::config(
                            "gaussian jump sizes need sd >= 0 and must not be identically zero",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn fine_steps(&self) -> usize {
        self.n * self.substeps
    }
}

/// Observations of one path plus the hidden ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPath {
    /// `X_0, X_Δ, …, X_1`.
    pub observations: Vec<f64>,
    /// Continuous part `X_0 + ∫b ds + ∫σ dW` on the coarse grid.
    pub continuous: Vec<f64>,
    /// σ on the fine grid, `n · substeps + 1` points.
    pub fine_sigma: Vec<f64>,
    pub jump_times: Vec<f64>,
    pub jump_sizes: Vec<f64>,
    /// σ at the fine grid point at or before each jump time.
    pub sigma_at_jumps: Vec<f64>,
    pub seed: u64,
}

impl SimulatedPath {
    pub fn n(&self) -> usize {
        self.observations.len() - 1
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.n() as f64
    }

    /// `∫₀¹ σ_s^q ds` as a left Riemann sum over the fine grid.
    pub fn integrated_sigma_power(&self, q: f64) -> f64 {
        let steps = self.fine_sigma.len() - 1;
        let h = 1.0 / steps as f64;
        let mut acc = NeumaierSum::new();
        for &s in &self.fine_sigma[..steps] {
            acc += s.powf(q);
        }
        h * acc.value()
    }
}

/// Which central limit theorem the conditional variance belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum Regime {
    /// Scaled power variation of a continuous process.
    ContinuousPower(f64),
    /// Unscaled power variation, `p > 3`, dominated by jumps.
    JumpPower(f64),
    /// Realised quadratic variation.
    Quadratic,
}

impl Regime {
    pub fn power(&self) -> f64 {
        match *self {
            Regime::ContinuousPower(p) | Regime::JumpPower(p) => p,
            Regime::Quadratic => 2.0,
        }
    }

    /// The scaling under which the power variation has the regime's limit.
    pub fn natural_mode(&self) -> ScalingMode {
        match self {
            Regime::ContinuousPower(_) => ScalingMode::Scaled,
            Regime::JumpPower(_) | Regime::Quadratic => ScalingMode::Unscaled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceParts {
    pub continuous_part: f64,
    pub jump_part: f64,
    pub total: f64,
}

/// Simulates one path; identical `(spec, seed)` give bitwise identical
/// paths.
pub fn simulate_path(spec: &ModelSpec, seed: u64) -> Result<SimulatedPath> {
    spec.validate()?;
    let n = spec.n;
    let substeps = spec.substeps;
    let steps = spec.fine_steps();
    let h = 1.0 / steps as f64;

    let (jump_times, jump_sizes) = draw_jumps(&spec.jumps, &mut stream_rng(seed, STREAM_JUMPS));

    let fine_sigma = match spec.vol {
        Volatility::Constant { sigma } => vec![sigma; steps + 1],
        Volatility::GeometricOu {
            kappa,
            long_run,
            vol_of_vol,
            initial,
        } => {
            let driver = brownian_increments(
                &mut stream_rng(seed, STREAM_VOLATILITY),
                n,
                substeps,
            );
            let log_target = long_run.ln();
            let mut log_sigma = initial.ln();
            let mut path = Vec::with_capacity(steps + 1);
            path.push(initial);
            for (j, db) in driver.into_iter().enumerate() {
                log_sigma += kappa * (log_target - log_sigma) * h + vol_of_vol * db;
                let sigma = log_sigma.exp();
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::NumericOverflow {
                        step: j + 1,
                        quantity: "volatility",
                    });
                }
                path.push(sigma);
            }
            path
        }
    };
    debug_assert_eq!(fine_sigma[0], spec.vol.initial());

    let dw = brownian_increments(&mut stream_rng(seed, STREAM_DIFFUSION), n, substeps);

    let mut observations = Vec::with_capacity(n + 1);
    let mut continuous = Vec::with_capacity(n + 1);
    let mut sigma_at_jumps = Vec::with_capacity(jump_times.len());
    let mut x = spec.x0;
    let mut x_cont = spec.x0;
    observations.push(x);
    continuous.push(x_cont);
    let mut next_jump = 0;
    for j in 0..steps {
        let t = j as f64 / steps as f64;
        let t_next = (j + 1) as f64 / steps as f64;
        let sigma = fine_sigma[j];
        let dx = spec.drift.eval(t, x, sigma) * h + sigma * dw[j];
        x += dx;
        x_cont += dx;
        while next_jump < jump_times.len() && jump_times[next_jump] <= t_next {
            x += jump_sizes[next_jump];
            sigma_at_jumps.push(sigma);
            next_jump += 1;
        }
        if !x.is_finite() {
            return Err(Error::NumericOverflow {
                step: j + 1,
                quantity: "process value",
            });
        }
        if (j + 1) % substeps == 0 {
            observations.push(x);
            continuous.push(x_cont);
        }
    }

    Ok(SimulatedPath {
        observations,
        continuous,
        fine_sigma,
        jump_times,
        jump_sizes,
        sigma_at_jumps,
        seed,
    })
}

fn draw_jumps(jumps: &Jumps, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let Jumps::CompoundPoisson { intensity, sizes } = *jumps else {
        return (Vec::new(), Vec::new());
    };
    if intensity == 0.0 {
        return (Vec::new(), Vec::new());
    }
    let count = Poisson::new(intensity)
        .expect("intensity validated as positive and finite")
        .sample(rng) as usize;
    let mut times: Vec<f64> = Vec::with_capacity(count);
    while times.len() < count {
        let t: f64 = rng.random();
        // Times live in (0, 1) and must be distinct.
        if t > 0.0 && !times.contains(&t) {
            times.push(t);
        }
    }
    times.sort_by(f64::total_cmp);
    let sizes = (0..count)
        .map(|_| loop {
            let size = match sizes {
                JumpSizes::PointMass { size } => size,
                JumpSizes::Gaussian { mean, sd } => Normal::new(mean, sd)
                    .expect("sd validated as non-negative")
                    .sample(rng),
                JumpSizes::TwoPoint { size } => {
                    if rng.random::<bool>() {
                        size
                    } else {
                        -size
                    }
                }
            };
            if size != 0.0 {
                break size;
            }
        })
        .collect();
    (times, sizes)
}

/// Increments of a standard Brownian motion on the fine grid of `n · substeps`
/// steps over `[0, 1]`, generated coarse-to-fine.
pub(crate) fn brownian_increments(
    rng: &mut ChaCha8Rng,
    n: usize,
    substeps: usize,
) -> Vec<f64> {
    let coarse_sd = (1.0 / n as f64).sqrt();
    let mut incs: Vec<f64> = (0..n)
        .map(|_| coarse_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    if substeps == 1 {
        return incs;
    }
    if substeps.is_power_of_two() {
        let mut length = 1.0 / n as f64;
        while incs.len() < n * substeps {
            let half_sd = 0.5 * length.sqrt();
            let mut refined = Vec::with_capacity(2 * incs.len());
            for &d in &incs {
                let z: f64 = rng.sample(StandardNormal);
                refined.push(0.5 * d + half_sd * z);
                refined.push(0.5 * d - half_sd * z);
            }
            incs = refined;
            length *= 0.5;
        }
        incs
    } else {
        // Bridge increments: i.i.d. draws shifted to the coarse total.
        let fine_sd = (1.0 / (n * substeps) as f64).sqrt();
        let mut refined = Vec::with_capacity(n * substeps);
        let mut draws = vec![0.0; substeps];
        for &d in &incs {
            for z in draws.iter_mut() {
                *z = fine_sd * rng.sample::<f64, _>(StandardNormal);
            }
            let shift = (d - draws.iter().sum::<f64>()) / substeps as f64;
            refined.extend(draws.iter().map(|z| z + shift));
        }
        refined
    }
}

/// Conditional variance of the regime's limit law, evaluated on the hidden
/// ground truth of a path.
///
/// * continuous power `p`: `(m_{2p} − m_p²) ∫σ^{2p}`, no jump part;
/// * jump power `p`: `Σ p² |ΔX_s|^{2p−2} σ_s²`, no continuous part;
/// * quadratic: `2 ∫σ⁴ + Σ 4 |ΔX_s|² σ_s²`.
pub fn true_variance(path: &SimulatedPath, regime: Regime) -> Result<VarianceParts> {
    if path.fine_sigma.len() < 2 || path.observations.len() < 2 {
        return Err(Error::Domain("true variance of an empty path".into()));
    }
    let jump_sum = |g: &dyn Fn(f64, f64) -> f64| {
        path.jump_sizes
            .iter()
            .zip(&path.sigma_at_jumps)
            .map(|(&dx, &s)| g(dx, s))
            .sum::<NeumaierSum>()
            .value()
    };
    let (continuous_part, jump_part) = match regime {
        Regime::ContinuousPower(p) => {
            let m_p = normal_abs_moment(p)?;
            let m_2p = normal_abs_moment(2.0 * p)?;
            ((m_2p - m_p * m_p) * path.integrated_sigma_power(2.0 * p), 0.0)
        }
        Regime::JumpPower(p) => {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::Domain(format!("power must be positive, got {p}")));
            }
            (
                0.0,
                jump_sum(&|dx, s| p * p * dx.abs().powf(2.0 * p - 2.0) * s * s),
            )
        }
        Regime::Quadratic => (
            2.0 * path.integrated_sigma_power(4.0),
            jump_sum(&|dx, s| 4.0 * dx * dx * s * s),
        ),
    };
    Ok(VarianceParts {
        continuous_part,
        jump_part,
        total: continuous_part + jump_part,
    })
}

/// Probability limit `U` of the power variation with the regime's natural
/// scaling: `m_p ∫σ^p`, `Σ|ΔX_s|^p` or `[X, X]₁`.
pub fn power_variation_limit(path: &SimulatedPath, regime: Regime) -> Result<f64> {
    Ok(match regime {
        Regime::ContinuousPower(p) => normal_abs_moment(p)? * path.integrated_sigma_power(p),
        Regime::JumpPower(p) => path
            .jump_sizes
            .iter()
            .map(|dx| dx.abs().powf(p))
            .sum::<NeumaierSum>()
            .value(),
        Regime::Quadratic => {
            path.integrated_sigma_power(2.0)
                + path
                    .jump_sizes
                    .iter()
                    .map(|dx| dx * dx)
                    .sum::<NeumaierSum>()
                    .value()
        }
    })
}
