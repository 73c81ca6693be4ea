//! Gauss-Hermite quadrature for Gaussian expectations.

/// Nodes and weights for `integral of exp(-x^2) f(x) dx ~ sum w_i f(x_i)`.
///
/// Computed by Newton iteration on the orthonormal Hermite recurrence with
/// the usual asymptotic initial guesses; accurate to near machine precision
/// for the orders used here (<= ~200).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        let pim4 = 0.7511255444649425; // pi^(-1/4)
        let mut z = 0.0f64;
        for i in 0..half {
            z = match i {
                0 => (2.0 * n as f64 + 1.0).sqrt()
                    - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * (2.0 / j as f64).sqrt() * p2
                        - ((j as f64 - 1.0) / j as f64).sqrt() * p3;
                }
                pp = (2.0 * n as f64).sqrt() * p2;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() < 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[half - 1] = 0.0;
        }
        GaussHermite { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// `E[f(G)]` for `G ~ N(0, std^2)`. Degenerate `std = 0` evaluates `f(0)`.
    pub fn gaussian_expectation(&self, std: f64, f: impl Fn(f64) -> f64) -> f64 {
        if std == 0.0 {
            return f(0.0);
        }
        let c = std::f64::consts::SQRT_2 * std;
        self.integrate(|x| f(c * x)) / std::f64::consts::PI.sqrt()
    }
}
