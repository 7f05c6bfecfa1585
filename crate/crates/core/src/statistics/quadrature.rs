//! Gauss–Hermite nodes for expectations under the standard normal law.

/// Nodes and weights such that `Σ wᵢ g(xᵢ) ≈ E[g(N)]` for `N ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Rule with `order` points, exact for polynomials of degree `2·order − 1`.
    ///
    /// Roots of the orthonormal Hermite polynomials are found by Newton's
    /// method from asymptotic initial guesses, then rescaled from the weight
    /// `exp(−x²)` to the standard normal density.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Hermite order must be positive");
        const PI_M4: f64 = 0.751_125_544_464_942_5; // π^(-1/4)
        let n = order;
        let nf = n as f64;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z = 0.0_f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut derivative = 0.0;
            for _ in 0..200 {
                let mut p1 = PI_M4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                derivative = (2.0 * nf).sqrt() * p2;
                let previous = z;
                z = previous - p1 / derivative;
                if (z - previous).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (derivative * derivative);
            w[n - 1 - i] = w[i];
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let sqrt_2 = std::f64::consts::SQRT_2;
        Self {
            nodes: x.into_iter().map(|t| t * sqrt_2).collect(),
            weights: w.into_iter().map(|v| v / sqrt_pi).collect(),
        }
    }
}
