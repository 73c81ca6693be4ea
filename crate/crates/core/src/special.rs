//! Numerically stable Gaussian helpers shared by the denoisers and SE maps.

use std::f64::consts::PI;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Scaled complementary error function `exp(x^2) * erfc(x)` for `x >= 0`.
///
/// Below the crossover the direct product is exact; above it the Laplace
/// continued fraction avoids the underflow of `erfc`.
pub fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 4.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        // DLMF 7.9.1, evaluated bottom-up.
        let mut t = 0.0;
        for n in (1..=40).rev() {
            t = (n as f64 / 2.0) / (x + t);
        }
        1.0 / ((x + t) * PI.sqrt())
    }
}

/// Inverse Mills ratio `pdf(z) / cdf(z)`, stable for arbitrarily negative `z`.
pub fn mills_ratio(z: f64) -> f64 {
    if z >= 0.0 {
        normal_pdf(z) / normal_cdf(z)
    } else {
        // pdf(z)/cdf(z) = sqrt(2/pi) / erfcx(-z/sqrt(2)); the exp factors cancel.
        (2.0 / PI).sqrt() / erfcx(-z / std::f64::consts::SQRT_2)
    }
}

/// CDF of the chi-square distribution with 3 degrees of freedom.
pub fn chi2_cdf_3(q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    libm::erf((0.5 * q).sqrt()) - (2.0 * q / PI).sqrt() * (-0.5 * q).exp()
}

/// Log-density of `N(0, var)` at `x`.
pub fn log_normal_pdf(x: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - 0.5 * x * x / var
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfcx_branches_agree_at_crossover() {
        for &x in &[3.9f64, 3.99, 4.0, 4.01, 4.5] {
            let direct = (x * x).exp() * libm::erfc(x);
            let mut t = 0.0;
            for n in (1..=40).rev() {
                t = (n as f64 / 2.0) / (x + t);
            }
            let cf = 1.0 / ((x + t) * PI.sqrt());
            assert!((direct - cf).abs() / direct < 1e-13, "x={x}: {direct} vs {cf}");
        }
    }

    #[test]
    fn erfcx_reference_values() {
        assert!((erfcx(0.0) - 1.0).abs() < 1e-15);
        // e * erfc(1)
        assert!((erfcx(1.0) - 0.42758357615580700442).abs() < 1e-14);
        // asymptotic for large x: 1/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4)),
        // next term is O(x^-6) relative
        let x = 50.0;
        let asym = (1.0 - 0.5 / (x * x) + 0.75 / (x * x * x * x)) / (x * PI.sqrt());
        assert!((erfcx(x) - asym).abs() / asym < 1e-9);
    }

    #[test]
    fn mills_ratio_values() {
        assert!((mills_ratio(0.0) - (2.0 / PI).sqrt()).abs() < 1e-15);
        // Direct pdf/cdf is still exact down to z ~ -25 (erfc has not
        // underflowed); the erfcx form must agree there.
        for &z in &[-0.5, -2.0, -8.0, -15.0, -25.0] {
            let direct = normal_pdf(z) / (0.5 * libm::erfc(-z / std::f64::consts::SQRT_2));
            let rel = (mills_ratio(z) - direct).abs() / direct;
            assert!(rel < 1e-11, "z={z}: {} vs {direct}", mills_ratio(z));
        }
        // Deep tail: the 3-term asymptotic R ~ -z - 1/z + 2/z^3 has O(z^-4)
        // relative error.
        for &z in &[-30.0, -100.0, -1e4] {
            let approx = -z - 1.0 / z + 2.0 / (z * z * z);
            let tol = 20.0 / (z * z * z * z) + 1e-13;
            assert!(
                (mills_ratio(z) - approx).abs() / approx < tol,
                "z={z}: {} vs {approx}",
                mills_ratio(z)
            );
        }
        // Continuity across the sign switch (|R'(0)| = 2/pi, so the true
        // change over 2e-12 is ~1.3e-12).
        assert!((mills_ratio(-1e-12) - mills_ratio(1e-12)).abs() < 1e-11);
        // Positive side sanity: R(5) = pdf(5)/cdf(5) ~ pdf(5).
        assert!((mills_ratio(5.0) - normal_pdf(5.0)).abs() < 1e-9);
    }

    #[test]
    fn mills_ratio_finite_deep_in_tail() {
        // cdf underflows near -38; the erfcx form must stay finite and smooth.
        let r = mills_ratio(-300.0);
        assert!(r.is_finite());
        assert!((r - 300.0).abs() < 0.01);
    }

    #[test]
    fn chi2_cdf_3_against_series_oracle() {
        // Oracle: series for the regularized lower incomplete gamma P(3/2, q/2),
        // independent of the erf-based closed form.
        fn gamma_p_series(a: f64, x: f64) -> f64 {
            let mut term = 1.0 / a;
            let mut sum = term;
            let mut n = a;
            for _ in 0..500 {
                n += 1.0;
                term *= x / n;
                sum += term;
                if term < 1e-18 * sum {
                    break;
                }
            }
            // ln Gamma(3/2) = ln(sqrt(pi)/2)
            let ln_gamma_a = (PI.sqrt() / 2.0).ln();
            sum * (-x + a * x.ln() - ln_gamma_a).exp()
        }
        for &q in &[0.05, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let oracle = gamma_p_series(1.5, 0.5 * q);
            assert!(
                (chi2_cdf_3(q) - oracle).abs() < 1e-13,
                "q={q}: {} vs {oracle}",
                chi2_cdf_3(q)
            );
        }
        assert_eq!(chi2_cdf_3(0.0), 0.0);
        assert!((chi2_cdf_3(1e4) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_symmetry() {
        for &x in &[0.0, 0.3, 1.0, 4.0, 8.0] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
    }
}
