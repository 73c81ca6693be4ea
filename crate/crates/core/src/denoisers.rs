//! Scalar Bayesian denoisers: the Bernoulli-Gaussian posterior used by the
//! inner sub-module of module B, and the Bayes-optimal outer denoiser for the
//! linear and 1-bit channels.

use crate::model::MeasurementChannel;
use crate::special::{log_normal_pdf, mills_ratio};

/// Marginal spike-slab prior of a single signal entry: zero with probability
/// `1 - rho`, otherwise `N(0, slab_var)`.
#[derive(Debug, Clone, Copy)]
pub struct InnerPrior {
    /// Spike weight `k / N`.
    pub rho: f64,
    /// Slab variance `P / k`.
    pub slab_var: f64,
}

impl InnerPrior {
    /// Prior matched to a k-sparse signal of power `P` in dimension `n`.
    pub fn new(n: usize, k: usize, power: f64) -> Self {
        InnerPrior { rho: k as f64 / n as f64, slab_var: power / k as f64 }
    }
}

/// Posterior mean and second moment of one entry given the virtual Gaussian
/// observation `y = x + noise`, `noise ~ N(0, v)`.
///
/// Mixture weights are combined in log space so extreme `|y|` stays finite.
pub fn bg_posterior(y: f64, v: f64, prior: &InnerPrior) -> (f64, f64) {
    assert!(v > 0.0, "virtual noise variance must be positive");
    let s = prior.slab_var;
    let shrink = s / (s + v);
    let m_slab = shrink * y;
    let pi = slab_probability(y, v, prior);
    let mean = pi * m_slab;
    let second_moment = pi * (s * v / (s + v) + m_slab * m_slab);
    (mean, second_moment)
}

fn slab_probability(y: f64, v: f64, prior: &InnerPrior) -> f64 {
    if prior.rho >= 1.0 {
        return 1.0;
    }
    let s = prior.slab_var;
    // log odds of spike vs slab
    let d = (1.0 - prior.rho).ln() + log_normal_pdf(y, v)
        - (prior.rho.ln() + log_normal_pdf(y, s + v));
    if d > 0.0 {
        let e = (-d).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + d.exp())
    }
}

/// Per-component posterior variance of [`bg_posterior`], in the cancellation-
/// free form `pi * s v/(s+v) + pi (1-pi) m_slab^2`.
pub fn bg_posterior_variance(y: f64, v: f64, prior: &InnerPrior) -> f64 {
    assert!(v > 0.0, "virtual noise variance must be positive");
    let s = prior.slab_var;
    let m_slab = s / (s + v) * y;
    let pi = slab_probability(y, v, prior);
    pi * (s * v / (s + v)) + pi * (1.0 - pi) * m_slab * m_slab
}

/// Summed posterior variance `v_B = sum_n Var(x_n | x_{n,t})`.
pub fn bg_posterior_variance_sum(x_t: &[f64], v: f64, prior: &InnerPrior) -> f64 {
    x_t.iter().map(|&y| bg_posterior_variance(y, v, prior)).sum()
}

/// Divergence of the inner denoiser via the posterior-variance identity
/// `v_B = v_{A->B} xi`.
pub fn bg_divergence_xi(v_b: f64, v_a2b: f64) -> f64 {
    assert!(v_a2b > 0.0);
    v_b / v_a2b
}

/// Posterior of one hidden `z` entry given `(y, z_t)` under `Z ~ N(z_t, v)`.
#[derive(Debug, Clone, Copy)]
pub struct OuterPosterior {
    pub mean: f64,
    pub variance: f64,
}

/// Bayes-optimal outer denoiser, channel by channel.
///
/// For the 1-bit channel the conditional moments are the usual probit forms
/// with `tau = sqrt(v + sigma2)` and Mills ratio `R`; `sigma2 = 0` needs no
/// special case since `tau = sqrt(v)`.
pub fn outer_posterior(channel: MeasurementChannel, z_t: f64, y: f64, v: f64) -> OuterPosterior {
    assert!(v > 0.0, "outer noise variance must be positive");
    match channel {
        MeasurementChannel::Linear { sigma2 } => OuterPosterior {
            mean: (sigma2 * z_t + v * y) / (sigma2 + v),
            variance: sigma2 * v / (sigma2 + v),
        },
        MeasurementChannel::OneBitSign { sigma2 } => {
            assert!(y == 1.0 || y == -1.0, "1-bit observation must be +/-1, got {y}");
            let tau = (v + sigma2).sqrt();
            let zeta = y * z_t / tau;
            let r = mills_ratio(zeta);
            let mean = z_t + y * (v / tau) * r;
            let variance = (v - (v * v / (tau * tau)) * r * (r + zeta)).clamp(0.0, v);
            OuterPosterior { mean, variance }
        }
    }
}

/// Divergence `xi_B^z = mean_m Var(Z | y_m, z_{t,m}) / v`, in [0, 1].
pub fn outer_divergence_xi(
    channel: MeasurementChannel,
    z_t: &[f64],
    y: &[f64],
    v: f64,
) -> f64 {
    assert!(v > 0.0);
    match channel {
        // Gaussian posterior variance is data-independent.
        MeasurementChannel::Linear { sigma2 } => sigma2 / (sigma2 + v),
        MeasurementChannel::OneBitSign { .. } => {
            assert_eq!(z_t.len(), y.len());
            let sum: f64 = z_t
                .iter()
                .zip(y)
                .map(|(&zt, &yi)| outer_posterior(channel, zt, yi, v).variance)
                .sum();
            sum / (z_t.len() as f64 * v)
        }
    }
}
