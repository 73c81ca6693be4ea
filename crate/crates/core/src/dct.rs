//! Orthonormal DCT-II and its transpose, the fast orthogonal factors of the
//! sensing operator.
//!
//! Power-of-two lengths use the Lee split recursion in O(n log n). Small
//! non-power-of-two lengths (the measurement side, e.g. m = 200 or 2000) fall
//! back to a direct O(n^2) evaluation over a shared cosine table.

use crate::error::{invalid, Result};

/// Largest length accepted by the dense fallback.
pub const DENSE_MAX: usize = 4096;

#[derive(Debug, Clone)]
pub struct Pow2Dct {
    n: usize,
    /// Flat layout: factors `0.5 / cos((i + 0.5) pi / len)` for transform size
    /// `len = 2 * half` live at `twiddles[half + i]`.
    twiddles: Vec<f64>,
}

impl Pow2Dct {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two());
        let mut twiddles = vec![0.0; n.max(1)];
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let factor = std::f64::consts::PI / len as f64;
            for i in 0..half {
                twiddles[half + i] = 0.5 / ((i as f64 + 0.5) * factor).cos();
            }
            len *= 2;
        }
        Pow2Dct { n, twiddles }
    }

    /// Unscaled DCT-II: `X_k = sum_n x_n cos(pi (2n+1) k / (2N))`.
    fn raw_forward(&self, data: &mut [f64]) {
        let mut scratch = vec![0.0; self.n];
        Self::forward_rec(data, &mut scratch, &self.twiddles);
    }

    fn forward_rec(data: &mut [f64], scratch: &mut [f64], twiddles: &[f64]) {
        let len = data.len();
        if len == 1 {
            return;
        }
        let half = len / 2;
        for i in 0..half {
            let x = data[i];
            let y = data[len - 1 - i];
            scratch[i] = x + y;
            scratch[i + half] = (x - y) * twiddles[half + i];
        }
        if len > 2 {
            let (s1, s2) = scratch.split_at_mut(half);
            let (d1, d2) = data.split_at_mut(half);
            Self::forward_rec(s1, d1, twiddles);
            Self::forward_rec(s2, d2, twiddles);
        }
        for i in 0..half - 1 {
            data[i * 2] = scratch[i];
            data[i * 2 + 1] = scratch[i + half] + scratch[i + half + 1];
        }
        data[len - 2] = scratch[half - 1];
        data[len - 1] = scratch[len - 1];
    }

    /// Unscaled DCT-III with halved DC term:
    /// `x_n = y_0/2 + sum_{k>=1} y_k cos(pi k (2n+1) / (2N))`.
    fn raw_inverse(&self, data: &mut [f64]) {
        data[0] *= 0.5;
        let mut scratch = vec![0.0; self.n];
        Self::inverse_rec(data, &mut scratch, &self.twiddles);
    }

    fn inverse_rec(data: &mut [f64], scratch: &mut [f64], twiddles: &[f64]) {
        let len = data.len();
        if len == 1 {
            return;
        }
        let half = len / 2;
        scratch[0] = data[0];
        scratch[half] = data[1];
        for i in 1..half {
            scratch[i] = data[2 * i];
            scratch[i + half] = data[2 * i - 1] + data[2 * i + 1];
        }
        if len > 2 {
            let (s1, s2) = scratch.split_at_mut(half);
            let (d1, d2) = data.split_at_mut(half);
            Self::inverse_rec(s1, d1, twiddles);
            Self::inverse_rec(s2, d2, twiddles);
        }
        for i in 0..half {
            let x = scratch[i];
            let y = scratch[i + half] * twiddles[half + i];
            data[i] = x + y;
            data[len - 1 - i] = x - y;
        }
    }
}

#[derive(Debug, Clone)]
pub struct DenseDct {
    n: usize,
    /// `table[j] = cos(pi j / (2n))`, period `4n`.
    table: Vec<f64>,
}

impl DenseDct {
    pub fn new(n: usize) -> Self {
        let quarter = std::f64::consts::PI / (2 * n) as f64;
        let table = (0..4 * n).map(|j| (j as f64 * quarter).cos()).collect();
        DenseDct { n, table }
    }

    fn raw_forward(&self, data: &mut [f64]) {
        let n = self.n;
        let period = 4 * n;
        let input = data.to_vec();
        for (k, out) in data.iter_mut().enumerate() {
            // index (2i+1)k mod 4n advances by 2k per input sample
            let step = (2 * k) % period;
            let mut idx = k % period;
            let mut acc = 0.0;
            for &x in &input {
                acc += x * self.table[idx];
                idx += step;
                if idx >= period {
                    idx -= period;
                }
            }
            *out = acc;
        }
    }

    fn raw_inverse(&self, data: &mut [f64]) {
        let n = self.n;
        let period = 4 * n;
        let mut input = data.to_vec();
        input[0] *= 0.5;
        for (i, out) in data.iter_mut().enumerate() {
            let step = (2 * i + 1) % period;
            let mut idx = 0usize;
            let mut acc = 0.0;
            for &y in &input {
                acc += y * self.table[idx];
                idx += step;
                if idx >= period {
                    idx -= period;
                }
            }
            *out = acc;
        }
    }
}

/// Orthonormal DCT of a fixed length, dispatching on the fast path.
#[derive(Debug, Clone)]
pub enum OrthonormalDct {
    Pow2(Pow2Dct),
    Dense(DenseDct),
}

impl OrthonormalDct {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("DCT length must be positive"));
        }
        if n.is_power_of_two() {
            Ok(OrthonormalDct::Pow2(Pow2Dct::new(n)))
        } else if n <= DENSE_MAX {
            Ok(OrthonormalDct::Dense(DenseDct::new(n)))
        } else {
            Err(invalid(format!(
                "DCT length {n} unsupported: needs a power of two or <= {DENSE_MAX}"
            )))
        }
    }

    pub fn len(&self) -> usize {
        match self {
            OrthonormalDct::Pow2(d) => d.n,
            OrthonormalDct::Dense(d) => d.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-place orthonormal DCT-II (the matrix `C` with `C C^T = I`).
    pub fn forward(&self, data: &mut [f64]) {
        debug_assert_eq!(data.len(), self.len());
        match self {
            OrthonormalDct::Pow2(d) => d.raw_forward(data),
            OrthonormalDct::Dense(d) => d.raw_forward(data),
        }
        let n = self.len() as f64;
        let s = (2.0 / n).sqrt();
        data[0] *= (1.0 / n).sqrt();
        for v in data.iter_mut().skip(1) {
            *v *= s;
        }
    }

    /// In-place transpose `C^T` (equals the inverse by orthogonality).
    pub fn transpose(&self, data: &mut [f64]) {
        debug_assert_eq!(data.len(), self.len());
        let n = self.len() as f64;
        let s = (2.0 / n).sqrt();
        // DC gets 2*sqrt(1/n); the raw DCT-III halves it back internally.
        data[0] *= 2.0 * (1.0 / n).sqrt();
        for v in data.iter_mut().skip(1) {
            *v *= s;
        }
        match self {
            OrthonormalDct::Pow2(d) => d.raw_inverse(data),
            OrthonormalDct::Dense(d) => d.raw_inverse(data),
        }
    }
}
