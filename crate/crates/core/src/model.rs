//! Problem domain: sparse signals, measurement channels, error metrics.

use crate::error::{invalid, Error, Result};
use crate::operator::{self, SvdSensingOperator};
use crate::rng::Stream;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Law of the scaled nonzero entries `u = sqrt(k) * x_S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonzeroLaw {
    /// `U ~ N(0, P)`.
    Gaussian { power: f64 },
    /// `U = sqrt(P)` with probability one.
    Constant { power: f64 },
    /// `U = ±sqrt(P)` with equal probability.
    TwoPoint { power: f64 },
}

impl NonzeroLaw {
    /// Second moment `E[U^2] = P`.
    pub fn power(&self) -> f64 {
        match *self {
            NonzeroLaw::Gaussian { power }
            | NonzeroLaw::Constant { power }
            | NonzeroLaw::TwoPoint { power } => power,
        }
    }

    /// Essential minimum of `|U|`: zero for the Gaussian law, `sqrt(P)` otherwise.
    pub fn u_min(&self) -> f64 {
        match *self {
            NonzeroLaw::Gaussian { .. } => 0.0,
            NonzeroLaw::Constant { power } | NonzeroLaw::TwoPoint { power } => power.sqrt(),
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match *self {
            NonzeroLaw::Gaussian { power } => {
                let g: f64 = StandardNormal.sample(rng);
                g * power.sqrt()
            }
            NonzeroLaw::Constant { power } => power.sqrt(),
            NonzeroLaw::TwoPoint { power } => {
                if rng.random::<bool>() {
                    power.sqrt()
                } else {
                    -power.sqrt()
                }
            }
        }
    }
}

/// Measurement map `y = g(z, w)` with Gaussian noise `w ~ N(0, sigma2 I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementChannel {
    /// `y = z + w`.
    Linear { sigma2: f64 },
    /// `y = sgn(z + w)`, with `sgn(0) := +1`.
    OneBitSign { sigma2: f64 },
}

impl MeasurementChannel {
    pub fn sigma2(&self) -> f64 {
        match *self {
            MeasurementChannel::Linear { sigma2 } | MeasurementChannel::OneBitSign { sigma2 } => {
                sigma2
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, MeasurementChannel::Linear { .. })
    }
}

/// Sign with the deterministic tie-break `sgn(0) = +1`.
pub fn sign_pm1(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// A k-sparse signal with entries `u_i / sqrt(k)` on a uniform random support.
#[derive(Debug, Clone)]
pub struct SparseSignal {
    pub n: usize,
    pub k: usize,
    /// Sorted support indices.
    pub support: Vec<usize>,
    /// Length-`n` dense representation, zero off support.
    pub values: Vec<f64>,
    /// Analytic power `P = E[U^2]`, so `E[||x||^2] = P`.
    pub power: f64,
}

/// Draw a k-sparse signal: uniform support without replacement, i.i.d. nonzeros.
pub fn make_sparse_signal(
    n: usize,
    k: usize,
    law: NonzeroLaw,
    rng: &mut Stream,
) -> Result<SparseSignal> {
    if k == 0 || k > n {
        return Err(invalid(format!("sparsity k={k} must satisfy 1 <= k <= n={n}")));
    }
    if law.power() <= 0.0 {
        return Err(invalid("nonzero law power must be positive"));
    }
    let mut support: Vec<usize> = rand::seq::index::sample(rng, n, k).into_vec();
    support.sort_unstable();
    let scale = 1.0 / (k as f64).sqrt();
    let mut values = vec![0.0; n];
    for &idx in &support {
        values[idx] = law.sample(rng) * scale;
    }
    Ok(SparseSignal { n, k, support, values, power: law.power() })
}

/// Apply the measurement channel: returns `(y, w)` with `w ~ N(0, sigma2 I)`.
pub fn measure(
    channel: MeasurementChannel,
    z: &[f64],
    rng: &mut Stream,
) -> (Vec<f64>, Vec<f64>) {
    let sigma = channel.sigma2().sqrt();
    let w: Vec<f64> = if sigma > 0.0 {
        z.iter()
            .map(|_| {
                let g: f64 = StandardNormal.sample(rng);
                g * sigma
            })
            .collect()
    } else {
        vec![0.0; z.len()]
    };
    let y: Vec<f64> = match channel {
        MeasurementChannel::Linear { .. } => z.iter().zip(&w).map(|(a, b)| a + b).collect(),
        MeasurementChannel::OneBitSign { .. } => {
            z.iter().zip(&w).map(|(a, b)| sign_pm1(a + b)).collect()
        }
    };
    (y, w)
}

/// Sampling prefactor `delta = m / (k ln(n/k))`.
pub fn delta_of(n: usize, k: usize, m: usize) -> Result<f64> {
    if k == 0 || m == 0 {
        return Err(invalid("k and m must be positive"));
    }
    if n <= k {
        return Err(invalid(format!("delta undefined for n={n} <= k={k}: ln(n/k) <= 0")));
    }
    Ok(m as f64 / (k as f64 * (n as f64 / k as f64).ln()))
}

/// `||x_hat - x||_2^2`.
pub fn unnormalized_sq_error(x_hat: &[f64], x: &[f64]) -> Result<f64> {
    if x_hat.len() != x.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: x_hat.len() });
    }
    Ok(x_hat.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Scale-invariant direction error `||x/||x|| - x_hat/||x_hat||||^2 = 2 - 2 cos(angle)`.
pub fn normalized_direction_error(x_hat: &[f64], x: &[f64]) -> Result<f64> {
    if x_hat.len() != x.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: x_hat.len() });
    }
    let nh = norm2(x_hat);
    let nx = norm2(x);
    if nh == 0.0 || nx == 0.0 {
        return Err(Error::DegenerateInput("direction error needs nonzero norms".into()));
    }
    let dot: f64 = x_hat.iter().zip(x).map(|(a, b)| a * b).sum();
    Ok(2.0 - 2.0 * dot / (nh * nx))
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// A generated problem: the hidden truth is retained for diagnostics only.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub signal: SparseSignal,
    pub operator: SvdSensingOperator,
    pub channel: MeasurementChannel,
    /// Observed measurements.
    pub y: Vec<f64>,
    /// Hidden linear transform `A x`; never consumed by solvers.
    pub z: Vec<f64>,
    pub seed: u64,
}

impl ProblemInstance {
    /// Build operator, signal, and measurements from the trial stream of
    /// `(master_seed, trial)`. Draw order: permutations, support, nonzeros, noise.
    #[allow(clippy::too_many_arguments)]
    pub fn generate(
        n: usize,
        k: usize,
        m: usize,
        kappa: f64,
        law: NonzeroLaw,
        channel: MeasurementChannel,
        master_seed: u64,
        trial: u64,
    ) -> Result<ProblemInstance> {
        let mut rng = crate::rng::trial_stream(master_seed, trial);
        let operator = operator::build_operator(m, n, kappa, &mut rng)?;
        let signal = make_sparse_signal(n, k, law, &mut rng)?;
        let z = operator.apply(&signal.values);
        let (y, _w) = measure(channel, &z, &mut rng);
        Ok(ProblemInstance { signal, operator, channel, y, z, seed: master_seed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_stream;

    #[test]
    fn full_support_constant_law() {
        let mut rng = trial_stream(1, 0);
        let s = make_sparse_signal(8, 8, NonzeroLaw::Constant { power: 1.0 }, &mut rng).unwrap();
        let inv_sqrt8 = 1.0 / 8f64.sqrt();
        for &v in &s.values {
            assert!((v.abs() - inv_sqrt8).abs() < 1e-15);
        }
        let norm_sq: f64 = s.values.iter().map(|v| v * v).sum();
        assert!((norm_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k1_scaling() {
        let mut rng = trial_stream(2, 0);
        let s = make_sparse_signal(4, 1, NonzeroLaw::Constant { power: 4.0 }, &mut rng).unwrap();
        let nonzeros: Vec<f64> = s.values.iter().copied().filter(|v| *v != 0.0).collect();
        assert_eq!(nonzeros.len(), 1);
        assert!((nonzeros[0].abs() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_signal_power_concentrates() {
        // E[||x||^2] = 1; average over many draws must concentrate.
        let law = NonzeroLaw::Gaussian { power: 1.0 };
        let mut acc = 0.0;
        let trials = 10_000;
        for t in 0..trials {
            let mut rng = trial_stream(3, t);
            let s = make_sparse_signal(1 << 10, 16, law, &mut rng).unwrap();
            acc += s.values.iter().map(|v| v * v).sum::<f64>();
        }
        let mean = acc / trials as f64;
        assert!((0.98..=1.02).contains(&mean), "mean power {mean}");
    }

    #[test]
    fn invalid_sparsity_rejected() {
        let mut rng = trial_stream(0, 0);
        assert!(make_sparse_signal(4, 0, NonzeroLaw::Gaussian { power: 1.0 }, &mut rng).is_err());
        assert!(make_sparse_signal(4, 5, NonzeroLaw::Gaussian { power: 1.0 }, &mut rng).is_err());
    }

    #[test]
    fn support_uniformity() {
        // Each index appears with frequency k/n within 3 binomial sigma.
        let (n, k) = (16usize, 2usize);
        let draws = 100_000u64;
        let mut counts = vec![0u64; n];
        for t in 0..draws {
            let mut rng = trial_stream(11, t);
            let s = make_sparse_signal(n, k, NonzeroLaw::Constant { power: 1.0 }, &mut rng).unwrap();
            for &i in &s.support {
                counts[i] += 1;
            }
        }
        let p = k as f64 / n as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let dev = (c as f64 - draws as f64 * p).abs();
            assert!(dev <= 3.0 * sd, "index {i}: count {c}, dev {dev} > {}", 3.0 * sd);
        }
    }

    #[test]
    fn measure_noiseless_linear_identity() {
        let z = vec![0.5, -2.0, 0.0];
        let mut rng = trial_stream(4, 0);
        let (y, w) = measure(MeasurementChannel::Linear { sigma2: 0.0 }, &z, &mut rng);
        assert_eq!(y, z);
        assert!(w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn measure_sign_of_z() {
        let z = vec![0.5, -2.0];
        let mut rng = trial_stream(4, 0);
        let (y, _) = measure(MeasurementChannel::OneBitSign { sigma2: 0.0 }, &z, &mut rng);
        assert_eq!(y, vec![1.0, -1.0]);
        assert_eq!(sign_pm1(0.0), 1.0);
    }

    #[test]
    fn measure_noise_power_concentrates() {
        // ||y||^2 / M for z = 0, sigma2 = 1 is a chi-square mean: within [0.99, 1.01].
        let m = 100_000;
        let z = vec![0.0; m];
        let mut rng = trial_stream(5, 0);
        let (y, _) = measure(MeasurementChannel::Linear { sigma2: 1.0 }, &z, &mut rng);
        let p = y.iter().map(|v| v * v).sum::<f64>() / m as f64;
        assert!((0.99..=1.01).contains(&p), "noise power {p}");
    }

    #[test]
    fn measure_reproducible_across_runs() {
        let z = vec![0.1; 64];
        let ch = MeasurementChannel::Linear { sigma2: 0.5 };
        let (y1, w1) = measure(ch, &z, &mut trial_stream(9, 2));
        let (y2, w2) = measure(ch, &z, &mut trial_stream(9, 2));
        assert_eq!(y1, y2);
        assert_eq!(w1, w2);
    }

    #[test]
    fn delta_values() {
        let d = delta_of(1 << 16, 16, 200).unwrap();
        assert!((d - 1.5028).abs() < 5e-4, "delta {d}");
        let d2 = delta_of(1 << 16, 16, 2000).unwrap();
        assert!((d2 - 15.028).abs() < 5e-3, "delta {d2}");
        // n = e*k gives ln(n/k) = 1 exactly up to rounding of e.
        let k = 1000usize;
        let n = (std::f64::consts::E * k as f64).round() as usize;
        let d3 = delta_of(n, k, k).unwrap();
        assert!((d3 - 1.0).abs() < 1e-3);
        assert!(delta_of(16, 16, 4).is_err());
    }

    #[test]
    fn error_metrics() {
        let x = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        assert_eq!(unnormalized_sq_error(&x, &x).unwrap(), 0.0);
        assert_eq!(unnormalized_sq_error(&x, &e2).unwrap(), 2.0);
        assert!(unnormalized_sq_error(&x, &[0.0]).is_err());

        let x3: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        assert!(normalized_direction_error(&x3, &x).unwrap().abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((normalized_direction_error(&neg, &x).unwrap() - 4.0).abs() < 1e-12);
        assert!((normalized_direction_error(&x, &e2).unwrap() - 2.0).abs() < 1e-12);
        assert!(normalized_direction_error(&[0.0, 0.0], &x).is_err());
    }
}
