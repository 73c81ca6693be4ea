//! State evolution: the deterministic scalar recursion predicting GOAMP's
//! per-iteration error in the sublinear-sparsity limit, its linear-channel
//! reduction, the fixed-point maps phi/psi, and the reconstruction threshold.

use crate::denoisers::outer_posterior;
use crate::error::{invalid, Error, Result};
use crate::model::{MeasurementChannel, NonzeroLaw};
use crate::operator::SpectralModel;
use crate::quad::GaussHermite;
use crate::special::{chi2_cdf_3, normal_cdf};

/// The four SE variables at iteration `t`.
#[derive(Debug, Clone, Copy)]
pub struct SeState {
    pub v_x_b2a: f64,
    pub v_z_b2a: f64,
    pub v_x_a2b: f64,
    pub v_z_a2b: f64,
    pub t: usize,
}

#[derive(Debug, Clone)]
pub struct SeConfig {
    pub delta: f64,
    pub spectrum: SpectralModel,
    pub channel: MeasurementChannel,
    pub law: NonzeroLaw,
    pub quad_order: usize,
    pub max_iters: usize,
    /// Stop when successive `v_x_b2a` differ by less than `tol * P`.
    pub tol: f64,
}

impl SeConfig {
    pub fn new(
        delta: f64,
        spectrum: SpectralModel,
        channel: MeasurementChannel,
        law: NonzeroLaw,
    ) -> Self {
        SeConfig { delta, spectrum, channel, law, quad_order: 61, max_iters: 10_000, tol: 1e-14 }
    }
}

#[derive(Debug, Clone)]
pub struct SeTrajectory {
    pub states: Vec<SeState>,
    pub converged: bool,
}

impl SeTrajectory {
    pub fn final_v_x(&self) -> f64 {
        self.states.last().map(|s| s.v_x_b2a).unwrap_or(f64::NAN)
    }
}

/// Module-A divergence `xi_A^z = E[v_x Lambda / (v_z + v_x Lambda)]`.
pub fn se_xi_a_z(v_x: f64, v_z: f64, spectrum: &SpectralModel) -> Result<f64> {
    if v_x == 0.0 && v_z == 0.0 {
        return Err(invalid("xi_A^z undefined for v_x = v_z = 0"));
    }
    Ok(spectrum.expect(|l| v_x * l / (v_z + v_x * l)))
}

/// Inner fixed-point map `phi(x) = E[U^2 1(U^2 < x)]`.
pub fn se_inner_map_phi(x: f64, law: NonzeroLaw) -> f64 {
    let p = law.power();
    match law {
        // E[U^2 1(U^2 < x)] = P * Chi2CDF_3(x / P) for U ~ N(0, P).
        NonzeroLaw::Gaussian { .. } => {
            if x <= 0.0 {
                0.0
            } else {
                p * chi2_cdf_3(x / p)
            }
        }
        NonzeroLaw::Constant { .. } | NonzeroLaw::TwoPoint { .. } => {
            if p < x {
                p
            } else {
                0.0
            }
        }
    }
}

/// Outer fixed-point map `psi(y) = (2/delta) / E[Lambda / (sigma2 + y Lambda)]`.
pub fn se_linear_psi(y: f64, delta: f64, sigma2: f64, spectrum: &SpectralModel) -> Result<f64> {
    if sigma2 == 0.0 && y == 0.0 {
        return Err(invalid("psi undefined at y = 0 with sigma2 = 0"));
    }
    if sigma2 + y * spectrum.min_lambda() <= 0.0 {
        return Err(invalid("psi requires sigma2 + y lambda_min > 0"));
    }
    Ok(2.0 / (delta * spectrum.expect(|l| l / (sigma2 + y * l))))
}

/// One Bayesian SE step of the outer sub-module in module B.
///
/// Under the decomposition `Z = Z_t + N_z` with `Z_t ~ N(0, P - v)` and
/// `N_z ~ N(0, v)`: returns the averaged divergence
/// `xi = E[Var(Z | Y, Z_t)] / v` and `v_next = xi v / (1 - xi)`.
pub fn se_outer_step_bayes(
    v_z_a2b: f64,
    channel: MeasurementChannel,
    p: f64,
    quad: &GaussHermite,
) -> Result<(f64, f64)> {
    if !(v_z_a2b > 0.0) {
        return Err(invalid("outer SE step needs v > 0"));
    }
    if v_z_a2b > p * (1.0 + 1e-9) {
        return Err(invalid(format!("outer SE step needs v <= P, got v={v_z_a2b}, P={p}")));
    }
    let v = v_z_a2b.min(p);
    let xi = match channel {
        MeasurementChannel::Linear { sigma2 } => sigma2 / (sigma2 + v),
        MeasurementChannel::OneBitSign { sigma2 } => {
            let tau = (v + sigma2).sqrt();
            let zt_std = (p - v).max(0.0).sqrt();
            let mean_var = quad.gaussian_expectation(zt_std, |zt| {
                let mut acc = 0.0;
                for &y in &[1.0, -1.0] {
                    let prob = normal_cdf(y * zt / tau);
                    if prob > 0.0 {
                        acc += prob * outer_posterior(channel, zt, y, v).variance;
                    }
                }
                acc
            });
            mean_var / v
        }
    };
    if xi >= 1.0 - 1e-15 {
        return Err(Error::IllConditioned {
            iteration: 0,
            detail: format!("outer SE divergence xi={xi} too close to 1"),
        });
    }
    let v_next = match channel {
        // exact algebra: xi v / (1 - xi) = sigma2
        MeasurementChannel::Linear { sigma2 } => sigma2,
        MeasurementChannel::OneBitSign { .. } => xi * v / (1.0 - xi),
    };
    Ok((xi, v_next))
}

/// Full Bayesian SE recursion (modules A and B, both sub-modules).
pub fn run_se_bayes(config: &SeConfig) -> Result<SeTrajectory> {
    validate(config)?;
    let p = config.law.power();
    let quad = GaussHermite::new(config.quad_order);
    let mut v_x_b2a = p;
    // Initial outer step with v_{A->B}^{z,-1} = P.
    let (_, mut v_z_b2a) = se_outer_step_bayes(p, config.channel, p, &quad)?;
    let mut states = vec![SeState { v_x_b2a, v_z_b2a, v_x_a2b: p, v_z_a2b: p, t: 0 }];
    let mut converged = false;
    for t in 0..config.max_iters {
        let xi_a = se_xi_a_z(v_x_b2a, v_z_b2a, &config.spectrum)?;
        if xi_a <= 0.0 || xi_a >= 1.0 {
            break; // error-free or stalled fixed point reached
        }
        let v_z_a2b = (xi_a * v_z_b2a / (1.0 - xi_a)).min(p);
        let v_x_a2b = v_x_b2a / xi_a;
        let v_x_next = se_inner_map_phi(2.0 * v_x_a2b / config.delta, config.law);
        let (_, v_z_next) = se_outer_step_bayes(v_z_a2b, config.channel, p, &quad)?;
        let delta_v = (v_x_next - v_x_b2a).abs();
        v_x_b2a = v_x_next;
        v_z_b2a = v_z_next;
        states.push(SeState { v_x_b2a, v_z_b2a, v_x_a2b, v_z_a2b, t: t + 1 });
        if delta_v < config.tol * p || v_x_b2a == 0.0 {
            converged = true;
            break;
        }
    }
    Ok(SeTrajectory { states, converged })
}

/// Linear-measurement reduction: two-variable recursion
/// `v_x_a2b = 1 / E[Lambda / (sigma2 + v_x_b2a Lambda)]`, `v_x_b2a = phi(2 v_x_a2b / delta)`.
pub fn run_se_linear(config: &SeConfig) -> Result<SeTrajectory> {
    validate(config)?;
    let sigma2 = match config.channel {
        MeasurementChannel::Linear { sigma2 } => sigma2,
        _ => return Err(Error::NonLinearChannel),
    };
    let p = config.law.power();
    let mut v_x_b2a = p;
    let mut states =
        vec![SeState { v_x_b2a, v_z_b2a: sigma2, v_x_a2b: p, v_z_a2b: sigma2, t: 0 }];
    let mut converged = false;
    for t in 0..config.max_iters {
        let denom = config.spectrum.expect(|l| l / (sigma2 + v_x_b2a * l));
        if !(denom > 0.0) {
            break;
        }
        let v_x_a2b = 1.0 / denom;
        let v_x_next = se_inner_map_phi(2.0 * v_x_a2b / config.delta, config.law);
        let delta_v = (v_x_next - v_x_b2a).abs();
        v_x_b2a = v_x_next;
        states.push(SeState { v_x_b2a, v_z_b2a: sigma2, v_x_a2b, v_z_a2b: sigma2, t: t + 1 });
        if delta_v < config.tol * p || v_x_b2a == 0.0 {
            converged = true;
            break;
        }
    }
    Ok(SeTrajectory { states, converged })
}

/// Reconstruction threshold `delta_* = 2 / E[u_min^2 Lambda / (sigma2 + u_min^2 Lambda)]`.
pub fn reconstruction_threshold(
    spectrum: &SpectralModel,
    sigma2: f64,
    u_min: f64,
) -> Result<f64> {
    if !(u_min > 0.0) {
        return Err(Error::ThresholdUndefined);
    }
    let u2 = u_min * u_min;
    Ok(2.0 / spectrum.expect(|l| u2 * l / (sigma2 + u2 * l)))
}

/// Map an SE variance to the normalized direction error of the posterior-mean
/// estimator: `2 - 2 sqrt((P - v) / P)`.
pub fn se_metric_normalized(v_bar: f64, p: f64) -> Result<f64> {
    if !(0.0..=p * (1.0 + 1e-12)).contains(&v_bar) {
        return Err(invalid(format!("SE variance {v_bar} outside [0, P={p}]")));
    }
    Ok(2.0 - 2.0 * ((p - v_bar.min(p)) / p).sqrt())
}

fn validate(config: &SeConfig) -> Result<()> {
    if !(config.delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    if config.quad_order < 20 {
        return Err(invalid("quadrature order must be at least 20"));
    }
    if config.spectrum.atoms.is_empty() {
        return Err(invalid("spectrum must have atoms"));
    }
    Ok(())
}

/// Data for the SE chart: module-A and module-B curves plus the forward
/// trajectory, all in the `(v_x_a2b, v_x_b2a)` plane.
#[derive(Debug, Clone)]
pub struct SeChart {
    /// `(v_x_b2a, v_x_a2b)` samples of the module-A map.
    pub module_a: Vec<(f64, f64)>,
    /// `(v_x_a2b, v_x_b2a)` samples of the module-B map.
    pub module_b: Vec<(f64, f64)>,
    /// Zigzag trajectory points `(v_x_a2b, v_x_b2a)` from `v = P`.
    pub trajectory: Vec<(f64, f64)>,
    /// Number of crossings of the two curves found on the grid.
    pub crossings: usize,
}

/// Build the chart for the linear channel on a log grid of `points` values of
/// `v_x_b2a` in `[v_lo, P]`.
pub fn se_chart_linear(config: &SeConfig, v_lo: f64, points: usize) -> Result<SeChart> {
    validate(config)?;
    let sigma2 = match config.channel {
        MeasurementChannel::Linear { sigma2 } => sigma2,
        _ => return Err(Error::NonLinearChannel),
    };
    let p = config.law.power();
    let module_a_map =
        |v: f64| 1.0 / config.spectrum.expect(|l| l / (sigma2 + v * l));
    let module_b_map = |va: f64| se_inner_map_phi(2.0 * va / config.delta, config.law);

    let lo = v_lo.max(1e-300);
    let ratio = (p / lo).powf(1.0 / (points.max(2) as f64 - 1.0));
    let mut grid = Vec::with_capacity(points);
    let mut v = lo;
    for _ in 0..points {
        grid.push(v.min(p));
        v *= ratio;
    }

    let module_a: Vec<(f64, f64)> = grid.iter().map(|&v| (v, module_a_map(v))).collect();
    let module_b: Vec<(f64, f64)> =
        grid.iter().map(|&v| (module_a_map(v), module_b_map(module_a_map(v)))).collect();

    // Crossings: sign changes of h(v) = phi(2 A(v)/delta) - v on the grid.
    let h: Vec<f64> = grid.iter().map(|&v| module_b_map(module_a_map(v)) - v).collect();
    let mut crossings = 0;
    for w in h.windows(2) {
        if w[0] == 0.0 || (w[0] > 0.0) != (w[1] > 0.0) {
            crossings += 1;
        }
    }

    // Forward trajectory from v = P, recorded as chart staircase points.
    let mut trajectory = Vec::new();
    let mut v_cur = p;
    for _ in 0..200 {
        let va = module_a_map(v_cur);
        trajectory.push((va, v_cur));
        let v_next = module_b_map(va);
        trajectory.push((va, v_next));
        if (v_next - v_cur).abs() < config.tol * p {
            break;
        }
        v_cur = v_next;
    }

    Ok(SeChart { module_a, module_b, trajectory, crossings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::limit_spectral_model;
    use std::f64::consts::PI;

    const GAUSS: NonzeroLaw = NonzeroLaw::Gaussian { power: 1.0 };
    const CONST: NonzeroLaw = NonzeroLaw::Constant { power: 1.0 };
    const LIN_40DB: MeasurementChannel = MeasurementChannel::Linear { sigma2: 1e-4 };

    #[test]
    fn xi_a_z_single_atom_and_limits() {
        let single = SpectralModel::single_atom();
        let xi = se_xi_a_z(2.0, 0.5, &single).unwrap();
        assert!((xi - 2.0 / 2.5).abs() < 1e-15);
        assert_eq!(se_xi_a_z(1.0, 0.0, &single).unwrap(), 1.0);
        assert!(se_xi_a_z(0.0, 0.0, &single).is_err());
    }

    #[test]
    fn xi_a_z_matches_summation_oracle() {
        let spec = limit_spectral_model(200, 100.0).unwrap();
        let (v_x, v_z) = (1.0, 1e-4);
        let xi = se_xi_a_z(v_x, v_z, &spec).unwrap();
        let oracle: f64 = spec
            .atoms
            .iter()
            .map(|&(l, w)| w * v_x * l / (v_z + v_x * l))
            .sum();
        assert!((xi - oracle).abs() < 1e-14);
    }

    #[test]
    fn phi_endpoints_and_gaussian_value() {
        assert_eq!(se_inner_map_phi(0.0, GAUSS), 0.0);
        assert!((se_inner_map_phi(1e12, GAUSS) - 1.0).abs() < 1e-12);
        // Adaptive quadrature oracle of E[U^2 1(U^2 < 1)] for U ~ N(0,1):
        // panels of 5-point Gauss-Legendre on [-1, 1].
        let gl_x = [-0.906179845938664, -0.538469310105683, 0.0, 0.538469310105683, 0.906179845938664];
        let gl_w = [0.236926885056189, 0.478628670499366, 0.568888888888889, 0.478628670499366, 0.236926885056189];
        let panels = 2000;
        let h = 2.0 / panels as f64;
        let mut oracle = 0.0;
        for pnl in 0..panels {
            let a = -1.0 + pnl as f64 * h;
            for (x, w) in gl_x.iter().zip(gl_w) {
                let u = a + 0.5 * h * (x + 1.0);
                oracle += w * 0.5 * h * u * u * (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
            }
        }
        let got = se_inner_map_phi(1.0, GAUSS);
        assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
        assert!((got - 0.19875).abs() < 1e-4);
    }

    #[test]
    fn phi_constant_law_is_step() {
        assert_eq!(se_inner_map_phi(0.999, CONST), 0.0);
        assert_eq!(se_inner_map_phi(1.0, CONST), 0.0); // strict inequality
        assert_eq!(se_inner_map_phi(1.001, CONST), 1.0);
    }

    #[test]
    fn phi_monotone_and_bounded() {
        let mut last = 0.0;
        for i in 0..200 {
            let x = i as f64 * 0.05;
            let v = se_inner_map_phi(x, GAUSS);
            assert!(v + 1e-15 >= last);
            assert!(v <= x.min(1.0) + 1e-12);
            last = v;
        }
    }

    #[test]
    fn psi_values_and_shape() {
        let single = SpectralModel::single_atom();
        let (delta, sigma2) = (1.5, 1e-4);
        let psi1 = se_linear_psi(1.0, delta, sigma2, &single).unwrap();
        assert!((psi1 - 2.0 / delta * (sigma2 + 1.0)).abs() < 1e-14);
        let psi0 = se_linear_psi(0.0, delta, sigma2, &single).unwrap();
        assert!((psi0 - 2.0 * sigma2 / delta).abs() < 1e-18);

        let spec = limit_spectral_model(200, 100.0).unwrap();
        let psi = se_linear_psi(1.0, 1.5, 1e-4, &spec).unwrap();
        let oracle = 2.0 / (1.5 * spec.atoms.iter().map(|&(l, w)| w * l / (1e-4 + l)).sum::<f64>());
        assert!((psi - oracle).abs() < 1e-14);

        // monotone increasing, concave (checked via finite differences)
        let mut last = 0.0;
        let mut last_slope = f64::INFINITY;
        for i in 0..100 {
            let y = i as f64 * 0.02;
            let v = se_linear_psi(y, 1.5, 1e-4, &spec).unwrap();
            if i > 0 {
                let slope = (v - last) / 0.02;
                assert!(slope > 0.0);
                assert!(slope <= last_slope + 1e-8);
                last_slope = slope;
            }
            last = v;
        }
        assert!(se_linear_psi(0.0, 1.5, 0.0, &single).is_err());
    }

    #[test]
    fn outer_step_linear_exact() {
        let quad = GaussHermite::new(61);
        let (xi, v_next) = se_outer_step_bayes(0.4, LIN_40DB, 1.0, &quad).unwrap();
        assert!((xi - 1e-4 / (1e-4 + 0.4)).abs() < 1e-16);
        assert_eq!(v_next, 1e-4);
    }

    #[test]
    fn outer_step_init_half_normal() {
        // v = P, 1-bit, sigma = 0: xi = 1 - 2/pi, v_next = P (pi/2 - 1).
        let quad = GaussHermite::new(61);
        let ch = MeasurementChannel::OneBitSign { sigma2: 0.0 };
        let (xi, v_next) = se_outer_step_bayes(1.0, ch, 1.0, &quad).unwrap();
        assert!((xi - (1.0 - 2.0 / PI)).abs() < 1e-12, "xi {xi}");
        assert!((v_next - (PI / 2.0 - 1.0)).abs() < 1e-12, "v_next {v_next}");
    }

    #[test]
    fn outer_step_quadrature_self_refinement() {
        let ch = MeasurementChannel::OneBitSign { sigma2: 1e-4 };
        let q40 = GaussHermite::new(40);
        let q80 = GaussHermite::new(80);
        let a = se_outer_step_bayes(0.5, ch, 1.0, &q40).unwrap();
        let b = se_outer_step_bayes(0.5, ch, 1.0, &q80).unwrap();
        assert!((a.0 - b.0).abs() < 1e-10, "{} vs {}", a.0, b.0);
        assert!((a.1 - b.1).abs() < 1e-10);
    }

    #[test]
    fn outer_step_rejects_v_above_p() {
        let quad = GaussHermite::new(61);
        let ch = MeasurementChannel::OneBitSign { sigma2: 0.0 };
        assert!(se_outer_step_bayes(1.5, ch, 1.0, &quad).is_err());
        assert!(se_outer_step_bayes(0.0, ch, 1.0, &quad).is_err());
    }

    #[test]
    fn se_linear_single_atom_map() {
        // lambda = 1: v_x_a2b = sigma2 + v_x_b2a.
        let cfg = SeConfig::new(3.0, SpectralModel::single_atom(), LIN_40DB, GAUSS);
        let traj = run_se_linear(&cfg).unwrap();
        let s1 = traj.states[1];
        assert!((s1.v_x_a2b - (1e-4 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn all_or_nothing_constant_law() {
        // Direct part: delta = 2.2 > delta_* = 2.0002 converges to zero.
        let mk = |delta: f64| SeConfig::new(delta, SpectralModel::single_atom(), LIN_40DB, CONST);
        let hi = run_se_linear(&mk(2.2)).unwrap();
        assert!(hi.converged && hi.final_v_x() < 1e-10, "v = {}", hi.final_v_x());
        // Converse: delta = 1.8 < delta_* sticks at a fixed point >= u_min^2 / 2.
        let lo = run_se_linear(&mk(1.8)).unwrap();
        assert!(lo.final_v_x() >= 0.5, "v = {}", lo.final_v_x());
        // Bisection over [1.9, 2.1] locates the transition at delta_* within 1e-3.
        let mut a = 1.9;
        let mut b = 2.1;
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            let v = run_se_linear(&mk(mid)).unwrap().final_v_x();
            if v < 1e-10 {
                b = mid;
            } else {
                a = mid;
            }
        }
        let delta_star =
            reconstruction_threshold(&SpectralModel::single_atom(), 1e-4, 1.0).unwrap();
        assert!((0.5 * (a + b) - delta_star).abs() < 1e-3, "transition {} vs {delta_star}", 0.5 * (a + b));
    }

    #[test]
    fn se_monotone_non_increasing() {
        let spec = limit_spectral_model(200, 100.0).unwrap();
        let cfg = SeConfig::new(1.5028, spec, LIN_40DB, GAUSS);
        let traj = run_se_linear(&cfg).unwrap();
        for w in traj.states.windows(2) {
            assert!(w[1].v_x_b2a <= w[0].v_x_b2a + 1e-15);
        }
    }

    #[test]
    fn bayes_and_linear_recursions_agree_on_linear_channel() {
        for &kappa in &[1.0, 150.0, 5000.0] {
            let spec = limit_spectral_model(200, kappa).unwrap();
            let cfg = SeConfig::new(1.5028, spec, LIN_40DB, GAUSS);
            let a = run_se_bayes(&cfg).unwrap();
            let b = run_se_linear(&cfg).unwrap();
            let n = a.states.len().min(b.states.len());
            assert!(n > 3);
            for i in 0..n {
                assert!(
                    (a.states[i].v_x_b2a - b.states[i].v_x_b2a).abs() < 1e-12,
                    "kappa={kappa} t={i}: {} vs {}",
                    a.states[i].v_x_b2a,
                    b.states[i].v_x_b2a
                );
            }
        }
    }

    #[test]
    fn one_bit_se_runs_and_decreases() {
        let spec = limit_spectral_model(200, 1.0).unwrap();
        let ch = MeasurementChannel::OneBitSign { sigma2: 1e-4 };
        let mut cfg = SeConfig::new(15.0, spec, ch, GAUSS);
        cfg.max_iters = 50;
        let traj = run_se_bayes(&cfg).unwrap();
        assert!(traj.states.len() > 5);
        for w in traj.states.windows(2) {
            assert!(w[1].v_x_b2a <= w[0].v_x_b2a + 1e-12);
            assert!(w[1].v_z_a2b <= 1.0 + 1e-12);
        }
        assert!(traj.final_v_x() < 0.05, "final {}", traj.final_v_x());
    }

    #[test]
    fn threshold_values() {
        let single = SpectralModel::single_atom();
        let d = reconstruction_threshold(&single, 1e-4, 1.0).unwrap();
        assert!((d - 2.0002).abs() < 1e-9);
        let d0 = reconstruction_threshold(&limit_spectral_model(64, 37.0).unwrap(), 0.0, 0.5)
            .unwrap();
        assert!((d0 - 2.0).abs() < 1e-12);
        assert!(reconstruction_threshold(&single, 1e-4, 0.0).is_err());
    }

    #[test]
    fn threshold_jensen_property() {
        // delta_*(spectrum) >= delta_*(lambda = 1) for unit-mean spectra.
        let base = reconstruction_threshold(&SpectralModel::single_atom(), 1e-4, 1.0).unwrap();
        let mut state = 12345u64;
        for _ in 0..20 {
            // random unit-mean spectrum of 8 atoms
            let mut lam = Vec::new();
            for _ in 0..8 {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                lam.push(0.05 + (state % 1000) as f64 / 200.0);
            }
            let mean = lam.iter().sum::<f64>() / 8.0;
            let atoms: Vec<(f64, f64)> = lam.into_iter().map(|l| (l / mean, 0.125)).collect();
            let spec = SpectralModel { atoms };
            let d = reconstruction_threshold(&spec, 1e-4, 1.0).unwrap();
            assert!(d >= base - 1e-12, "{d} < {base}");
        }
    }

    #[test]
    fn metric_endpoints() {
        assert_eq!(se_metric_normalized(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(se_metric_normalized(1.0, 1.0).unwrap(), 2.0);
        let v = se_metric_normalized(0.19, 1.0).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
        assert!(se_metric_normalized(1.5, 1.0).is_err());
    }

    #[test]
    fn chart_crossing_counts() {
        // The two maps intersect exactly once at this delta and SNR for all
        // three condition numbers; the trajectory converges to that point.
        let mk = |kappa: f64| {
            let spec = limit_spectral_model(200, kappa).unwrap();
            SeConfig::new(1.5028, spec, LIN_40DB, GAUSS)
        };
        for &kappa in &[1.0, 150.0, 5000.0] {
            let chart = se_chart_linear(&mk(kappa), 1e-8, 4000).unwrap();
            assert_eq!(chart.crossings, 1, "kappa={kappa}: {}", chart.crossings);
            let (_, last_v) = *chart.trajectory.last().unwrap();
            let traj = run_se_linear(&mk(kappa)).unwrap();
            assert!((last_v - traj.final_v_x()).abs() < 1e-9);
        }
    }
}
