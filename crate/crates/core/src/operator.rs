//! The implicit SVD-structured sensing operator `A = U_dct P1 Σ P2 V_dct`
//! with a geometric singular-value profile, plus the spectral models consumed
//! by state evolution and the LMMSE resolvent.

use crate::dct::OrthonormalDct;
use crate::error::{invalid, Error, Result};
use crate::rng::Stream;
use rand::seq::SliceRandom;

/// Geometric singular values `sigma_i = c r^(i-1)` with ratio
/// `sigma_1 / sigma_M = kappa`, normalized so `sum sigma_i^2 = M N`
/// (unit-mean eigenvalues of `Sigma Sigma^T / N`).
pub fn geometric_singular_values(m: usize, n: usize, kappa: f64) -> Result<Vec<f64>> {
    if m == 0 || n == 0 || m > n {
        return Err(invalid(format!("need 1 <= m <= n, got m={m}, n={n}")));
    }
    if !(kappa >= 1.0) {
        return Err(invalid(format!("condition number kappa={kappa} must be >= 1")));
    }
    let raw: Vec<f64> = if m == 1 || kappa == 1.0 {
        vec![1.0; m]
    } else {
        (0..m).map(|i| kappa.powf(-(i as f64) / (m as f64 - 1.0))).collect()
    };
    let sum_sq: f64 = raw.iter().map(|s| s * s).sum();
    let c = ((m * n) as f64 / sum_sq).sqrt();
    Ok(raw.into_iter().map(|s| c * s).collect())
}

/// Discrete spectral law of `Lambda = Sigma Sigma^T / N`: atoms with weights
/// summing to one and unit mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    /// `(lambda, weight)` pairs; all lambda positive.
    pub atoms: Vec<(f64, f64)>,
}

impl SpectralModel {
    pub fn single_atom() -> Self {
        SpectralModel { atoms: vec![(1.0, 1.0)] }
    }

    /// `E[f(Lambda)]` as an exact finite sum.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(l, w)| w * f(l)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|l| l)
    }

    pub fn min_lambda(&self) -> f64 {
        self.atoms.iter().map(|&(l, _)| l).fold(f64::INFINITY, f64::min)
    }
}

/// The M-atom geometric spectral law used as the SE limit for condition
/// number `kappa`.
pub fn limit_spectral_model(atoms: usize, kappa: f64) -> Result<SpectralModel> {
    if atoms == 0 {
        return Err(invalid("spectral model needs at least one atom"));
    }
    if !(kappa >= 1.0) {
        return Err(invalid(format!("condition number kappa={kappa} must be >= 1")));
    }
    if kappa == 1.0 {
        return Ok(SpectralModel::single_atom());
    }
    // lambda_i proportional to kappa^(-2(i-1)/(M-1)), normalized to unit mean.
    let raw: Vec<f64> =
        (0..atoms).map(|i| kappa.powf(-2.0 * i as f64 / (atoms as f64 - 1.0))).collect();
    let mean = raw.iter().sum::<f64>() / atoms as f64;
    let w = 1.0 / atoms as f64;
    Ok(SpectralModel { atoms: raw.into_iter().map(|l| (l / mean, w)).collect() })
}

/// Implicit `M x N` sensing matrix with fast apply/adjoint.
#[derive(Debug, Clone)]
pub struct SvdSensingOperator {
    pub m: usize,
    pub n: usize,
    /// `(P1 v)_i = v[perm1[i]]`.
    perm1: Vec<usize>,
    /// `(P2 v)_i = v[perm2[i]]`.
    perm2: Vec<usize>,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// Eigenvalues `lambda_i = sigma_i^2 / N` of `Sigma Sigma^T / N`.
    pub lambda: Vec<f64>,
    pub kappa: f64,
    dct_m: OrthonormalDct,
    dct_n: OrthonormalDct,
}

/// Sample an operator with the geometric spectrum and independent uniform
/// permutations drawn from `rng` (Fisher-Yates).
pub fn build_operator(m: usize, n: usize, kappa: f64, rng: &mut Stream) -> Result<SvdSensingOperator> {
    let sigma = geometric_singular_values(m, n, kappa)?;
    let dct_m = OrthonormalDct::new(m)?;
    let dct_n = OrthonormalDct::new(n)?;
    let mut perm1: Vec<usize> = (0..m).collect();
    perm1.shuffle(rng);
    let mut perm2: Vec<usize> = (0..n).collect();
    perm2.shuffle(rng);
    let lambda = sigma.iter().map(|s| s * s / n as f64).collect();
    Ok(SvdSensingOperator { m, n, perm1, perm2, sigma, lambda, kappa, dct_m, dct_n })
}

impl SvdSensingOperator {
    /// `A x` in O(N log N + M^2-or-M log M).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "apply: expected length {}", self.n);
        let mut t = x.to_vec();
        self.dct_n.forward(&mut t);
        let mut s = vec![0.0; self.m];
        for i in 0..self.m {
            s[i] = self.sigma[i] * t[self.perm2[i]];
        }
        let mut r = vec![0.0; self.m];
        for i in 0..self.m {
            r[i] = s[self.perm1[i]];
        }
        self.dct_m.forward(&mut r);
        r
    }

    /// `A^T y`.
    pub fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.m, "apply_adjoint: expected length {}", self.m);
        let mut t = y.to_vec();
        self.dct_m.transpose(&mut t);
        let mut u = vec![0.0; self.m];
        for i in 0..self.m {
            u[self.perm1[i]] = t[i];
        }
        let mut w = vec![0.0; self.n];
        for i in 0..self.m {
            w[self.perm2[i]] = self.sigma[i] * u[i];
        }
        self.dct_n.transpose(&mut w);
        w
    }

    /// `(gamma I + A A^T)^{-1} r`, applied diagonally in the left singular basis.
    pub fn lmmse_resolvent_apply(&self, gamma: f64, r: &[f64]) -> Result<Vec<f64>> {
        if !(gamma > 0.0) {
            return Err(invalid(format!("resolvent shift gamma={gamma} must be positive")));
        }
        if r.len() != self.m {
            return Err(Error::LengthMismatch { expected: self.m, got: r.len() });
        }
        let mut t = r.to_vec();
        self.dct_m.transpose(&mut t);
        let mut u = vec![0.0; self.m];
        for i in 0..self.m {
            u[self.perm1[i]] = t[i];
        }
        for (ui, s) in u.iter_mut().zip(&self.sigma) {
            *ui /= gamma + s * s;
        }
        let mut v = vec![0.0; self.m];
        for i in 0..self.m {
            v[i] = u[self.perm1[i]];
        }
        self.dct_m.forward(&mut v);
        Ok(v)
    }

    /// Empirical spectral law: uniform weights on the `lambda_i`.
    pub fn spectral_model(&self) -> SpectralModel {
        let w = 1.0 / self.m as f64;
        SpectralModel { atoms: self.lambda.iter().map(|&l| (l, w)).collect() }
    }
}

/// Free-function form of [`SvdSensingOperator::spectral_model`].
pub fn spectral_model_of(op: &SvdSensingOperator) -> SpectralModel {
    op.spectral_model()
}
