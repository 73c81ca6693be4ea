//! The GOAMP iteration: LMMSE module A, Bayesian module B (outer and inner
//! sub-modules), Onsager corrections, damping, the OAMP fast path for linear
//! measurements, and diagnostics for the predicted orthogonality/Gaussianity
//! of estimation errors.

use crate::denoisers::{bg_posterior, bg_posterior_variance_sum, outer_posterior, InnerPrior};
use crate::error::{invalid, Error, Result};
use crate::model::{
    normalized_direction_error, unnormalized_sq_error, MeasurementChannel, ProblemInstance,
};
use crate::operator::SvdSensingOperator;

/// Relative variance floor: every variance message stays above `1e-12 * P`.
pub const VAR_FLOOR_REL: f64 = 1e-12;

/// Damping factors applied just after the module-B sub-modules, for t > 0.
#[derive(Debug, Clone, Copy)]
pub struct DampingConfig {
    pub theta_x: f64,
    pub theta_z: f64,
}

impl DampingConfig {
    pub fn new(theta_x: f64, theta_z: f64) -> Result<Self> {
        for (name, v) in [("theta_x", theta_x), ("theta_z", theta_z)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid(format!("{name}={v} must lie in (0, 1]")));
            }
        }
        Ok(DampingConfig { theta_x, theta_z })
    }

    /// No damping.
    pub fn off() -> Self {
        DampingConfig { theta_x: 1.0, theta_z: 1.0 }
    }
}

/// Message state of one GOAMP run.
#[derive(Debug, Clone)]
pub struct GoampState {
    pub x_b2a: Vec<f64>,
    /// Estimate of the unnormalized square error of `x_b2a`.
    pub v_x_b2a: f64,
    pub z_b2a: Vec<f64>,
    /// Estimate of the per-component MSE of `z_b2a`.
    pub v_z_b2a: f64,
    pub x_a2b: Vec<f64>,
    pub v_x_a2b: f64,
    pub z_a2b: Vec<f64>,
    pub v_z_a2b: f64,
    /// Current signal estimate.
    pub x_b: Vec<f64>,
    pub t: usize,
}

/// Per-iteration error and variance record.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryPoint {
    pub t: usize,
    pub err_unnorm: f64,
    pub err_normdir: f64,
    pub v_x_b2a: f64,
    pub v_z_b2a: f64,
    pub v_x_a2b: f64,
    pub v_z_a2b: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub x_hat: Vec<f64>,
    /// True when an ill-conditioned message truncated the run early.
    pub flagged: bool,
}

/// Knobs for ablations and diagnostics on top of the plain run.
#[derive(Debug, Clone, Copy)]
pub struct GoampOptions {
    pub iterations: usize,
    pub damping: DampingConfig,
    /// When false, all Onsager mean corrections are skipped (diagnostic ablation).
    pub onsager: bool,
    /// When true, module A replaces the resolvent by its flat-spectrum scalar
    /// (the Bayesian-GAMP stand-in).
    pub matched_filter: bool,
    /// Record per-iteration `x_a2b` snapshots and the initial `z_b2a`.
    pub record_history: bool,
}

#[derive(Debug, Clone, Default)]
pub struct GoampHistory {
    pub z_b2a_init: Vec<f64>,
    pub x_a2b: Vec<Vec<f64>>,
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Initial messages: zero signal estimate with prior variance, and the
/// divergence-corrected outer init from `f_B^z(0, y; P)`.
pub fn goamp_init(problem: &ProblemInstance) -> Result<GoampState> {
    init_with(problem, true)
}

fn init_with(problem: &ProblemInstance, onsager: bool) -> Result<GoampState> {
    let p = problem.signal.power;
    let m = problem.operator.m;
    let n = problem.operator.n;
    let floor = VAR_FLOOR_REL * p;

    // E[||z||^2]/M = E[||x||^2] = P under the unit-mean spectrum normalization.
    let mut z_b = vec![0.0; m];
    let mut var_sum = 0.0;
    for i in 0..m {
        let post = outer_posterior(problem.channel, 0.0, problem.y[i], p);
        z_b[i] = post.mean;
        var_sum += post.variance;
    }
    // eta_{B,-1} = xi_{B,-1} for the Bayes-optimal outer denoiser.
    let eta = var_sum / (m as f64 * p);
    let denom = 1.0 - eta;
    if denom <= 1e-12 {
        return Err(Error::DegenerateInput(format!(
            "initialization divergence 1 - eta = {denom} too small"
        )));
    }
    let z_b2a: Vec<f64> =
        if onsager { z_b.iter().map(|v| v / denom).collect() } else { z_b };
    let v_z_b2a = match problem.channel {
        // The linear channel keeps z_{B->A} = y and v -> sigma^2; pinning the
        // analytic value here keeps the OAMP reduction exact at finite M.
        MeasurementChannel::Linear { sigma2 } => sigma2.max(floor),
        MeasurementChannel::OneBitSign { .. } => {
            (norm_sq(&z_b2a) / m as f64 - p).max(floor)
        }
    };
    Ok(GoampState {
        x_b2a: vec![0.0; n],
        v_x_b2a: p,
        z_b2a,
        v_z_b2a,
        x_a2b: vec![0.0; n],
        v_x_a2b: p,
        z_a2b: vec![0.0; m],
        v_z_a2b: p,
        x_b: vec![0.0; n],
        t: 0,
    })
}

/// Module A: scaled LMMSE estimators of x and z with analytic divergences
/// from the spectrum, Onsager-corrected, plus the modified z-variance
/// estimator `P - ||z_{A->B}||^2 / M` when positive.
pub fn module_a_step(
    state: &mut GoampState,
    op: &SvdSensingOperator,
    power: f64,
) -> Result<()> {
    module_a_step_with(state, op, power, true, false)
}

fn module_a_step_with(
    state: &mut GoampState,
    op: &SvdSensingOperator,
    power: f64,
    onsager: bool,
    matched_filter: bool,
) -> Result<()> {
    let m = op.m as f64;
    let n = op.n as f64;
    let floor = VAR_FLOOR_REL * power;
    let gamma = n * state.v_z_b2a / state.v_x_b2a;

    let ax = op.apply(&state.x_b2a);
    let resid: Vec<f64> = state.z_b2a.iter().zip(&ax).map(|(z, a)| z - a).collect();
    let (dx, xi_z) = if matched_filter {
        // flat-spectrum scalar in place of the resolvent
        let scale = 1.0 / (gamma + n);
        let u: Vec<f64> = resid.iter().map(|r| r * scale).collect();
        (op.apply_adjoint(&u), n / (gamma + n))
    } else {
        let u = op.lmmse_resolvent_apply(gamma, &resid)?;
        let xi_z = op
            .lambda
            .iter()
            .map(|&l| state.v_x_b2a * l / (state.v_z_b2a + state.v_x_b2a * l))
            .sum::<f64>()
            / m;
        (op.apply_adjoint(&u), xi_z)
    };
    if !(xi_z > 1e-14 && xi_z < 1.0 - 1e-14) {
        return Err(Error::IllConditioned {
            iteration: state.t,
            detail: format!("module-A divergence xi_z = {xi_z}"),
        });
    }
    let xi_x = 1.0 - xi_z;

    let adx = op.apply(&dx);
    let scale_x = n / m;
    // z_A = A x_{B->A} + A dx; x_A = x_{B->A} + (N/M) dx
    state.z_a2b = if onsager {
        ax.iter()
            .zip(&adx)
            .zip(&state.z_b2a)
            .map(|((a, d), z)| ((a + d) - xi_z * z) / (1.0 - xi_z))
            .collect()
    } else {
        ax.iter().zip(&adx).map(|(a, d)| a + d).collect()
    };
    let v_onsager = xi_z * state.v_z_b2a / (1.0 - xi_z);
    let modified = power - norm_sq(&state.z_a2b) / m;
    state.v_z_a2b = (if modified > 0.0 { modified } else { v_onsager }).max(floor);

    // 1 - xi_x = xi_z
    state.x_a2b = if onsager {
        state
            .x_b2a
            .iter()
            .zip(&dx)
            .map(|(x, d)| ((x + scale_x * d) - xi_x * x) / xi_z)
            .collect()
    } else {
        state.x_b2a.iter().zip(&dx).map(|(x, d)| x + scale_x * d).collect()
    };
    let diff_sq: f64 = dx.iter().map(|d| (scale_x * d) * (scale_x * d)).sum();
    state.v_x_a2b = (m * diff_sq / (n * xi_z * xi_z)).max(floor);
    Ok(())
}

/// Module B, outer sub-module: Bayes-optimal denoiser, eta = 0, Bayesian
/// variance update `xi v / (1 - xi)`.
pub fn module_b_outer_step(
    state: &mut GoampState,
    channel: MeasurementChannel,
    y: &[f64],
    power: f64,
) -> Result<()> {
    module_b_outer_step_with(state, channel, y, power, true)
}

fn module_b_outer_step_with(
    state: &mut GoampState,
    channel: MeasurementChannel,
    y: &[f64],
    power: f64,
    onsager: bool,
) -> Result<()> {
    let m = state.z_a2b.len() as f64;
    let v = state.v_z_a2b;
    let floor = VAR_FLOOR_REL * power;
    let mut z_b = vec![0.0; y.len()];
    let mut var_sum = 0.0;
    for i in 0..y.len() {
        let post = outer_posterior(channel, state.z_a2b[i], y[i], v);
        z_b[i] = post.mean;
        var_sum += post.variance;
    }
    let xi = var_sum / (m * v);
    if xi >= 1.0 - 1e-12 {
        return Err(Error::IllConditioned {
            iteration: state.t,
            detail: format!("module-B outer divergence xi = {xi}"),
        });
    }
    state.z_b2a = if onsager {
        z_b.iter()
            .zip(&state.z_a2b)
            .map(|(zb, za)| (zb - xi * za) / (1.0 - xi))
            .collect()
    } else {
        z_b
    };
    state.v_z_b2a = (xi * v / (1.0 - xi)).max(floor);
    Ok(())
}

/// Module B, inner sub-module: Bernoulli-Gaussian posterior mean with
/// per-component virtual noise `v_{A->B}^x / M`.
pub fn module_b_inner_step(
    state: &mut GoampState,
    prior: &InnerPrior,
    m: usize,
    power: f64,
) -> Result<()> {
    module_b_inner_step_with(state, prior, m, power, true)
}

fn module_b_inner_step_with(
    state: &mut GoampState,
    prior: &InnerPrior,
    m: usize,
    power: f64,
    onsager: bool,
) -> Result<()> {
    let n = state.x_a2b.len() as f64;
    let m_f = m as f64;
    let v = state.v_x_a2b;
    let vc = v / m_f;
    let floor = VAR_FLOOR_REL * power;
    let mut x_b = vec![0.0; state.x_a2b.len()];
    for (out, &xt) in x_b.iter_mut().zip(&state.x_a2b) {
        *out = bg_posterior(xt, vc, prior).0;
    }
    let v_b = bg_posterior_variance_sum(&state.x_a2b, vc, prior);
    let xi = v_b / v;
    let ratio = m_f / n;
    let denom = 1.0 - ratio * xi;
    if denom <= 1e-12 {
        return Err(Error::IllConditioned {
            iteration: state.t,
            detail: format!("module-B inner denominator 1 - (M/N) xi = {denom}"),
        });
    }
    state.x_b2a = if onsager {
        x_b.iter()
            .zip(&state.x_a2b)
            .map(|(xb, xa)| (xb - ratio * xi * xa) / denom)
            .collect()
    } else {
        x_b.clone()
    };
    state.v_x_b2a = (v * xi / denom).max(floor);
    state.x_b = x_b;
    Ok(())
}

/// Convex damping of the module-B outputs toward the previous iteration.
pub fn damp(
    state: &mut GoampState,
    prev_x: &[f64],
    prev_v_x: f64,
    prev_z: &[f64],
    prev_v_z: f64,
    cfg: &DampingConfig,
) {
    let (tx, tz) = (cfg.theta_x, cfg.theta_z);
    if tx < 1.0 {
        for (cur, &old) in state.x_b2a.iter_mut().zip(prev_x) {
            *cur = tx * *cur + (1.0 - tx) * old;
        }
        state.v_x_b2a = tx * state.v_x_b2a + (1.0 - tx) * prev_v_x;
    }
    if tz < 1.0 {
        for (cur, &old) in state.z_b2a.iter_mut().zip(prev_z) {
            *cur = tz * *cur + (1.0 - tz) * old;
        }
        state.v_z_b2a = tz * state.v_z_b2a + (1.0 - tz) * prev_v_z;
    }
}

fn record_point(points: &mut Vec<TrajectoryPoint>, state: &GoampState, problem: &ProblemInstance) {
    let x = &problem.signal.values;
    let err_unnorm = unnormalized_sq_error(&state.x_b, x).unwrap_or(f64::NAN);
    // the zero estimate has no direction; report the uninformative value 2
    let err_normdir = normalized_direction_error(&state.x_b, x).unwrap_or(2.0);
    points.push(TrajectoryPoint {
        t: state.t,
        err_unnorm,
        err_normdir,
        v_x_b2a: state.v_x_b2a,
        v_z_b2a: state.v_z_b2a,
        v_x_a2b: state.v_x_a2b,
        v_z_a2b: state.v_z_a2b,
    });
}

/// Full GOAMP run: init, then per iteration module A, module-B outer,
/// module-B inner, damping (for t > 0).
pub fn run_goamp(
    problem: &ProblemInstance,
    iterations: usize,
    damping: DampingConfig,
    prior: &InnerPrior,
) -> Result<Trajectory> {
    let opts = GoampOptions {
        iterations,
        damping,
        onsager: true,
        matched_filter: false,
        record_history: false,
    };
    run_goamp_with(problem, prior, &opts).map(|(t, _)| t)
}

/// GOAMP with module A replaced by the matched-filter scalar step; the
/// Bayesian-GAMP stand-in used for condition-number sensitivity comparisons.
pub fn run_gamp_ablation(
    problem: &ProblemInstance,
    iterations: usize,
    damping: DampingConfig,
    prior: &InnerPrior,
) -> Result<Trajectory> {
    let opts = GoampOptions {
        iterations,
        damping,
        onsager: true,
        matched_filter: true,
        record_history: false,
    };
    run_goamp_with(problem, prior, &opts).map(|(t, _)| t)
}

/// GOAMP with explicit options; returns the recorded history when requested.
pub fn run_goamp_with(
    problem: &ProblemInstance,
    prior: &InnerPrior,
    opts: &GoampOptions,
) -> Result<(Trajectory, GoampHistory)> {
    if opts.iterations == 0 {
        return Err(invalid("iterations must be at least 1"));
    }
    DampingConfig::new(opts.damping.theta_x, opts.damping.theta_z)?;
    let p = problem.signal.power;
    let m = problem.operator.m;
    let mut state = init_with(problem, opts.onsager)?;
    let mut history = GoampHistory::default();
    if opts.record_history {
        history.z_b2a_init = state.z_b2a.clone();
    }
    let mut points = Vec::with_capacity(opts.iterations + 1);
    record_point(&mut points, &state, problem);
    let mut flagged = false;
    for t in 0..opts.iterations {
        let prev_x = state.x_b2a.clone();
        let prev_v_x = state.v_x_b2a;
        let prev_z = state.z_b2a.clone();
        let prev_v_z = state.v_z_b2a;
        let step = module_a_step_with(
            &mut state,
            &problem.operator,
            p,
            opts.onsager,
            opts.matched_filter,
        )
        .and_then(|_| {
            module_b_outer_step_with(&mut state, problem.channel, &problem.y, p, opts.onsager)
        })
        .and_then(|_| module_b_inner_step_with(&mut state, prior, m, p, opts.onsager));
        if step.is_err() {
            flagged = true;
            break;
        }
        if t > 0 {
            damp(&mut state, &prev_x, prev_v_x, &prev_z, prev_v_z, &opts.damping);
        }
        state.t = t + 1;
        if opts.record_history {
            history.x_a2b.push(state.x_a2b.clone());
        }
        record_point(&mut points, &state, problem);
    }
    Ok((Trajectory { points, x_hat: state.x_b, flagged }, history))
}

/// OAMP fast path for linear measurements: `z_{B->A} = y` and
/// `v_{B->A}^z = sigma^2` are pinned, so only the inner sub-modules iterate.
pub fn run_oamp_linear(
    problem: &ProblemInstance,
    iterations: usize,
    damping: DampingConfig,
    prior: &InnerPrior,
) -> Result<Trajectory> {
    let sigma2 = match problem.channel {
        MeasurementChannel::Linear { sigma2 } => sigma2,
        _ => return Err(Error::NonLinearChannel),
    };
    if iterations == 0 {
        return Err(invalid("iterations must be at least 1"));
    }
    DampingConfig::new(damping.theta_x, damping.theta_z)?;
    let op = &problem.operator;
    let p = problem.signal.power;
    let (m, n) = (op.m as f64, op.n as f64);
    let floor = VAR_FLOOR_REL * p;
    let v_z = sigma2.max(floor);

    let mut state = GoampState {
        x_b2a: vec![0.0; op.n],
        v_x_b2a: p,
        z_b2a: problem.y.clone(),
        v_z_b2a: v_z,
        x_a2b: vec![0.0; op.n],
        v_x_a2b: p,
        z_a2b: vec![0.0; op.m],
        v_z_a2b: v_z,
        x_b: vec![0.0; op.n],
        t: 0,
    };
    let mut points = Vec::with_capacity(iterations + 1);
    record_point(&mut points, &state, problem);
    let mut flagged = false;
    for t in 0..iterations {
        let prev_x = state.x_b2a.clone();
        let prev_v_x = state.v_x_b2a;
        let step = (|| -> Result<()> {
            let gamma = n * v_z / state.v_x_b2a;
            let ax = op.apply(&state.x_b2a);
            let resid: Vec<f64> = problem.y.iter().zip(&ax).map(|(yv, a)| yv - a).collect();
            let u = op.lmmse_resolvent_apply(gamma, &resid)?;
            let dx = op.apply_adjoint(&u);
            let xi_z = op
                .lambda
                .iter()
                .map(|&l| state.v_x_b2a * l / (v_z + state.v_x_b2a * l))
                .sum::<f64>()
                / m;
            if !(xi_z > 1e-14 && xi_z < 1.0 - 1e-14) {
                return Err(Error::IllConditioned {
                    iteration: t,
                    detail: format!("OAMP divergence xi_z = {xi_z}"),
                });
            }
            let scale_x = n / m;
            let xi_x = 1.0 - xi_z;
            state.x_a2b = state
                .x_b2a
                .iter()
                .zip(&dx)
                .map(|(x, d)| ((x + scale_x * d) - xi_x * x) / xi_z)
                .collect();
            let diff_sq: f64 = dx.iter().map(|d| (scale_x * d) * (scale_x * d)).sum();
            state.v_x_a2b = (m * diff_sq / (n * xi_z * xi_z)).max(floor);
            module_b_inner_step_with(&mut state, prior, op.m, p, true)
        })();
        if step.is_err() {
            flagged = true;
            break;
        }
        if t > 0 {
            let damp_x = DampingConfig { theta_x: damping.theta_x, theta_z: 1.0 };
            damp(&mut state, &prev_x, prev_v_x, &[], 0.0, &damp_x);
        }
        state.t = t + 1;
        record_point(&mut points, &state, problem);
    }
    Ok(Trajectory { points, x_hat: state.x_b, flagged })
}

/// Empirical checks of the SE-predicted asymptotic properties.
#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    /// Normalized correlation between the hidden `z` and the initial error
    /// `z_{B->A}^0 - z`.
    pub z_init_correlation: f64,
    /// Normalized correlations `x^T (x_{A->B}^t - x)` per iteration.
    pub x_correlations: Vec<f64>,
    /// Excess kurtosis of the off-support entries of `x_{A->B}^t - x`.
    pub offsupport_excess_kurtosis: Vec<f64>,
}

/// Run GOAMP and report the orthogonality/Gaussianity diagnostics against the
/// hidden truth. `onsager = false` ablates the mean corrections so the
/// diagnostics can demonstrate their necessity.
pub fn diagnostics_orthogonality(
    problem: &ProblemInstance,
    iterations: usize,
    damping: DampingConfig,
    prior: &InnerPrior,
    onsager: bool,
) -> Result<DiagnosticsReport> {
    let opts = GoampOptions {
        iterations,
        damping,
        onsager,
        matched_filter: false,
        record_history: true,
    };
    let (_, history) = run_goamp_with(problem, prior, &opts)?;
    let z = &problem.z;
    let x = &problem.signal.values;

    let corr = |a: &[f64], b: &[f64]| -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
        let na = norm_sq(a).sqrt();
        let nb = norm_sq(b).sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    };

    let dz: Vec<f64> = history.z_b2a_init.iter().zip(z).map(|(a, b)| a - b).collect();
    let z_init_correlation = corr(z, &dz);

    let off_support: Vec<usize> = {
        let mut on = vec![false; x.len()];
        for &i in &problem.signal.support {
            on[i] = true;
        }
        (0..x.len()).filter(|&i| !on[i]).collect()
    };

    let mut x_correlations = Vec::new();
    let mut kurt = Vec::new();
    for snapshot in &history.x_a2b {
        let h: Vec<f64> = snapshot.iter().zip(x).map(|(a, b)| a - b).collect();
        x_correlations.push(corr(x, &h));
        let vals: Vec<f64> = off_support.iter().map(|&i| h[i]).collect();
        let nf = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / nf;
        let m2 = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
        let m4 = vals.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
        kurt.push(if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 });
    }
    Ok(DiagnosticsReport { z_init_correlation, x_correlations, offsupport_excess_kurtosis: kurt })
}
