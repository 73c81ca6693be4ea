//! Experiment execution: Monte-Carlo sweeps, SE curves, charts, and the
//! threshold table. Results are deterministic under a fixed seed regardless
//! of worker count.

use crate::config::{channel_of, law_of, Algorithm, ChannelKind, ExperimentConfig};
use crate::csv_out::{fmt_float, ResultRecord};
use goamp_core::baselines::{biht, fista, glasso, lambda_grid, omp, GreedyConfig, LassoConfig};
use goamp_core::denoisers::InnerPrior;
use goamp_core::goamp::{
    run_gamp_ablation, run_goamp, run_oamp_linear, DampingConfig, Trajectory,
};
use goamp_core::model::{normalized_direction_error, unnormalized_sq_error, ProblemInstance};
use goamp_core::operator::limit_spectral_model;
use goamp_core::se::{
    reconstruction_threshold, run_se_bayes, se_chart_linear, se_metric_normalized, SeConfig,
};
use goamp_core::{MeasurementChannel, Result as CoreResult};
use rayon::prelude::*;
use std::time::Instant;

/// One simulated trial of one algorithm.
struct TrialOutcome {
    records: Vec<ResultRecord>,
}

/// Per-trial stream id: the grid index selects a disjoint block of streams.
fn stream_id(grid_idx: usize, trial: usize) -> u64 {
    ((grid_idx as u64) << 32) | trial as u64
}

fn final_errors(pb: &ProblemInstance, x_hat: &[f64]) -> (f64, f64) {
    let unnorm = unnormalized_sq_error(x_hat, &pb.signal.values).unwrap_or(f64::NAN);
    let normdir = normalized_direction_error(x_hat, &pb.signal.values).unwrap_or(2.0);
    (unnorm, normdir)
}

fn make_problem(cfg: &ExperimentConfig, kappa: f64, grid_idx: usize, trial: usize) -> CoreResult<ProblemInstance> {
    ProblemInstance::generate(
        cfg.n,
        cfg.k,
        cfg.m,
        kappa,
        law_of(cfg),
        channel_of(cfg),
        cfg.seed,
        stream_id(grid_idx, trial),
    )
}

fn trajectory_records(
    cfg: &ExperimentConfig,
    algo: Algorithm,
    kappa: f64,
    trial: usize,
    traj: &Trajectory,
    wall_ms: f64,
) -> Vec<ResultRecord> {
    let delta = cfg.delta();
    let mut flags = Vec::new();
    if traj.flagged {
        flags.push("truncated".to_string());
    }
    let flags = flags.join(";");
    let mk = |t: usize, eu: f64, en: f64| ResultRecord {
        mode: cfg.mode.to_string(),
        algorithm: algo.name().to_string(),
        kappa,
        delta,
        trial,
        iteration: t,
        err_unnorm: eu,
        err_normdir: en,
        wall_ms,
        flags: flags.clone(),
    };
    if cfg.trace {
        traj.points.iter().map(|p| mk(p.t, p.err_unnorm, p.err_normdir)).collect()
    } else {
        let last = traj.points.last().expect("trajectory is never empty");
        vec![mk(last.t, last.err_unnorm, last.err_normdir)]
    }
}

fn single_record(
    cfg: &ExperimentConfig,
    algo: Algorithm,
    kappa: f64,
    trial: usize,
    iteration: usize,
    errs: (f64, f64),
    wall_ms: f64,
    flags: String,
) -> Vec<ResultRecord> {
    vec![ResultRecord {
        mode: cfg.mode.to_string(),
        algorithm: algo.name().to_string(),
        kappa,
        delta: cfg.delta(),
        trial,
        iteration,
        err_unnorm: errs.0,
        err_normdir: errs.1,
        wall_ms,
        flags,
    }]
}

/// Pick lambda for FISTA/GLasso on pilot trials of this grid point, scoring
/// by the oracle error the paper optimizes (unnormalized for the linear
/// channel, direction error for 1-bit data).
fn pick_lambda(
    cfg: &ExperimentConfig,
    algo: Algorithm,
    kappa: f64,
    grid_idx: usize,
) -> CoreResult<f64> {
    let pilots = cfg.lambda_pilots.min(cfg.trials).max(1);
    let iters = cfg.iterations_for(algo);
    let by_direction = matches!(algo, Algorithm::Glasso);
    let mut scores: Vec<(f64, Vec<f64>)> = Vec::new();
    for pilot in 0..pilots {
        let pb = make_problem(cfg, kappa, grid_idx, pilot)?;
        let grid = lambda_grid(&pb.operator, &pb.y, cfg.lambda_grid);
        if scores.is_empty() {
            scores = grid.iter().map(|&l| (l, Vec::new())).collect();
        }
        let errs: Vec<f64> = grid
            .par_iter()
            .map(|&lam| {
                let lcfg = LassoConfig::new(lam, iters);
                fista(&pb.operator, &pb.y, &lcfg).map(|out| {
                    let (eu, en) = final_errors(&pb, &out.x_hat);
                    if by_direction {
                        en
                    } else {
                        eu
                    }
                })
            })
            .collect::<CoreResult<_>>()?;
        for (slot, e) in scores.iter_mut().zip(errs) {
            slot.1.push(e);
        }
    }
    let best = scores
        .iter()
        .min_by(|a, b| {
            let ma = median(&a.1);
            let mb = median(&b.1);
            ma.total_cmp(&mb)
        })
        .map(|(l, _)| *l)
        .unwrap_or(0.1);
    Ok(best)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    if s.is_empty() {
        return f64::NAN;
    }
    let mid = s.len() / 2;
    if s.len() % 2 == 1 {
        s[mid]
    } else {
        0.5 * (s[mid - 1] + s[mid])
    }
}

fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    if s.is_empty() {
        return f64::NAN;
    }
    let pos = q * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    s[lo] * (1.0 - frac) + s[hi] * frac
}

fn run_trial(
    cfg: &ExperimentConfig,
    algo: Algorithm,
    kappa: f64,
    grid_idx: usize,
    trial: usize,
    lambda: Option<f64>,
) -> Vec<ResultRecord> {
    let start = Instant::now();
    let pb = match make_problem(cfg, kappa, grid_idx, trial) {
        Ok(pb) => pb,
        Err(e) => {
            return single_record(
                cfg,
                algo,
                kappa,
                trial,
                0,
                (f64::NAN, f64::NAN),
                0.0,
                format!("error:{e}"),
            )
        }
    };
    let prior = InnerPrior::new(cfg.n, cfg.k, cfg.power);
    let damping = DampingConfig { theta_x: cfg.theta_x, theta_z: cfg.theta_z };
    let iters = cfg.iterations_for(algo);
    let wall = |s: Instant| s.elapsed().as_secs_f64() * 1e3;
    match algo {
        Algorithm::Goamp => match run_goamp(&pb, iters, damping, &prior) {
            Ok(t) => trajectory_records(cfg, algo, kappa, trial, &t, wall(start)),
            Err(e) => single_record(cfg, algo, kappa, trial, 0, (f64::NAN, f64::NAN), wall(start), format!("error:{e}")),
        },
        Algorithm::Oamp => match run_oamp_linear(&pb, iters, damping, &prior) {
            Ok(t) => trajectory_records(cfg, algo, kappa, trial, &t, wall(start)),
            Err(e) => single_record(cfg, algo, kappa, trial, 0, (f64::NAN, f64::NAN), wall(start), format!("error:{e}")),
        },
        Algorithm::GampAblation => match run_gamp_ablation(&pb, iters, damping, &prior) {
            Ok(t) => trajectory_records(cfg, algo, kappa, trial, &t, wall(start)),
            Err(e) => single_record(cfg, algo, kappa, trial, 0, (f64::NAN, f64::NAN), wall(start), format!("error:{e}")),
        },
        Algorithm::Fista | Algorithm::Glasso => {
            let lam = lambda.unwrap_or(0.1);
            let lcfg = LassoConfig::new(lam, iters);
            let run = if matches!(algo, Algorithm::Fista) {
                fista(&pb.operator, &pb.y, &lcfg)
            } else {
                glasso(&pb.operator, &pb.y, &lcfg)
            };
            match run {
                Ok(out) => {
                    let errs = final_errors(&pb, &out.x_hat);
                    single_record(cfg, algo, kappa, trial, iters, errs, wall(start), format!("lambda={}", fmt_float(lam)))
                }
                Err(e) => single_record(cfg, algo, kappa, trial, 0, (f64::NAN, f64::NAN), wall(start), format!("error:{e}")),
            }
        }
        Algorithm::Omp => match omp(&pb.operator, &pb.y, cfg.k.min(cfg.m)) {
            Ok(out) => {
                let errs = final_errors(&pb, &out.x_hat);
                let flags = if out.rank_deficient { "rank_deficient".into() } else { String::new() };
                single_record(cfg, algo, kappa, trial, cfg.k.min(cfg.m), errs, wall(start), flags)
            }
            Err(e) => single_record(cfg, algo, kappa, trial, 0, (f64::NAN, f64::NAN), wall(start), format!("error:{e}")),
        },
        Algorithm::Biht => {
            let gcfg = GreedyConfig::new(cfg.k, iters);
            match biht(&pb.operator, &pb.y, &gcfg) {
                Ok(x_hat) => {
                    let errs = final_errors(&pb, &x_hat);
                    single_record(cfg, algo, kappa, trial, iters, errs, wall(start), String::new())
                }
                Err(e) => single_record(cfg, algo, kappa, trial, 0, (f64::NAN, f64::NAN), wall(start), format!("error:{e}")),
            }
        }
    }
}

pub struct SweepOutput {
    pub records: Vec<ResultRecord>,
    pub summary: String,
}

/// Monte-Carlo sweep over the kappa grid: per grid point and trial, build the
/// instance from its trial stream and run every requested algorithm.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SweepOutput, String> {
    // lambda selection is per grid point, outside the trial loop
    let mut lambdas: Vec<Vec<Option<f64>>> = Vec::new();
    for (gi, &kappa) in cfg.kappas.iter().enumerate() {
        let mut per_algo = Vec::new();
        for &algo in &cfg.algorithms {
            let lam = if matches!(algo, Algorithm::Fista | Algorithm::Glasso) {
                Some(pick_lambda(cfg, algo, kappa, gi).map_err(|e| e.to_string())?)
            } else {
                None
            };
            per_algo.push(lam);
        }
        lambdas.push(per_algo);
    }

    let mut tasks: Vec<(usize, usize, usize)> = Vec::new(); // (grid, algo, trial)
    for gi in 0..cfg.kappas.len() {
        for ai in 0..cfg.algorithms.len() {
            for t in 0..cfg.trials {
                tasks.push((gi, ai, t));
            }
        }
    }
    let outcomes: Vec<(usize, usize, usize, TrialOutcome)> = tasks
        .par_iter()
        .map(|&(gi, ai, t)| {
            let records =
                run_trial(cfg, cfg.algorithms[ai], cfg.kappas[gi], gi, t, lambdas[gi][ai]);
            (gi, ai, t, TrialOutcome { records })
        })
        .collect();

    // canonical order: grid point, algorithm, trial, iteration
    let mut keyed: Vec<(usize, usize, usize, Vec<ResultRecord>)> =
        outcomes.into_iter().map(|(g, a, t, o)| (g, a, t, o.records)).collect();
    keyed.sort_by_key(|&(g, a, t, _)| (g, a, t));
    let mut records = Vec::new();
    for (_, _, _, recs) in keyed {
        records.extend(recs);
    }

    let summary = summarize(cfg, &records);
    Ok(SweepOutput { records, summary })
}

fn summarize(cfg: &ExperimentConfig, records: &[ResultRecord]) -> String {
    let mut out = String::new();
    out.push_str("kappa      algorithm        n_ok  mean_unnorm    mean_normdir ");
    for q in &cfg.quantiles {
        out.push_str(&format!(" q{:<4}unnorm   q{:<4}normdir", q, q));
    }
    out.push('\n');
    for &kappa in &cfg.kappas {
        for &algo in &cfg.algorithms {
            let finals: Vec<&ResultRecord> = records
                .iter()
                .filter(|r| {
                    r.kappa == kappa
                        && r.algorithm == algo.name()
                        && !r.flags.starts_with("error")
                })
                .collect();
            // with --trace, keep only each trial's last iteration
            let mut last_per_trial: std::collections::BTreeMap<usize, &ResultRecord> =
                std::collections::BTreeMap::new();
            for r in finals {
                let e = last_per_trial.entry(r.trial).or_insert(r);
                if r.iteration >= e.iteration {
                    *e = r;
                }
            }
            let eu: Vec<f64> = last_per_trial.values().map(|r| r.err_unnorm).collect();
            let en: Vec<f64> = last_per_trial.values().map(|r| r.err_normdir).collect();
            if eu.is_empty() {
                continue;
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            out.push_str(&format!(
                "{:<10} {:<16} {:>4}  {:<13.6e}  {:<13.6e}",
                kappa,
                algo.name(),
                eu.len(),
                mean(&eu),
                mean(&en)
            ));
            for &q in &cfg.quantiles {
                out.push_str(&format!("  {:<12.6e} {:<12.6e}", quantile(&eu, q), quantile(&en, q)));
            }
            out.push('\n');
        }
    }
    out
}

/// SE trajectories over the (delta, kappa) grid, one row per iteration.
pub fn run_se_curves(cfg: &ExperimentConfig) -> Result<SweepOutput, String> {
    let law = law_of(cfg);
    let channel = channel_of(cfg);
    let grid: Vec<(f64, f64)> = cfg
        .deltas
        .iter()
        .flat_map(|&d| cfg.kappas.iter().map(move |&k| (d, k)))
        .collect();
    let results: Vec<Vec<ResultRecord>> = grid
        .par_iter()
        .map(|&(delta, kappa)| {
            let start = Instant::now();
            let spectrum = limit_spectral_model(cfg.atoms, kappa)
                .map_err(|e| e.to_string())?;
            let mut se_cfg = SeConfig::new(delta, spectrum, channel, law);
            se_cfg.max_iters = cfg.se_iterations;
            let traj = run_se_bayes(&se_cfg).map_err(|e| e.to_string())?;
            let wall = start.elapsed().as_secs_f64() * 1e3;
            let flags = if traj.converged { "converged" } else { "maxiter" };
            Ok(traj
                .states
                .iter()
                .map(|s| ResultRecord {
                    mode: cfg.mode.to_string(),
                    algorithm: "se".into(),
                    kappa,
                    delta,
                    trial: 0,
                    iteration: s.t,
                    err_unnorm: s.v_x_b2a,
                    err_normdir: se_metric_normalized(s.v_x_b2a.min(cfg.power), cfg.power)
                        .unwrap_or(f64::NAN),
                    wall_ms: wall,
                    flags: flags.to_string(),
                })
                .collect())
        })
        .collect::<Result<_, String>>()?;
    let records: Vec<ResultRecord> = results.into_iter().flatten().collect();
    let mut summary = String::from("delta      kappa      final_v_x      final_normdir\n");
    for chunk in records.chunk_by(|a, b| a.delta == b.delta && a.kappa == b.kappa) {
        let last = chunk.last().unwrap();
        summary.push_str(&format!(
            "{:<10} {:<10} {:<14.6e} {:<14.6e}\n",
            last.delta, last.kappa, last.err_unnorm, last.err_normdir
        ));
    }
    Ok(SweepOutput { records, summary })
}

/// Chart CSV lines (module-A curve, module-B curve, trajectory staircase).
pub fn run_chart(cfg: &ExperimentConfig) -> Result<(String, String), String> {
    if cfg.channel != ChannelKind::Linear {
        return Err("chart mode requires the linear channel".into());
    }
    let law = law_of(cfg);
    let delta = cfg.deltas.first().copied().unwrap_or_else(|| cfg.delta());
    let mut csv = String::from("mode,kappa,delta,curve,point,v_x_a2b,v_x_b2a\n");
    let mut summary = String::from("kappa      crossings  final_v_x\n");
    for &kappa in &cfg.kappas {
        let spectrum = limit_spectral_model(cfg.atoms, kappa).map_err(|e| e.to_string())?;
        let se_cfg = SeConfig::new(
            delta,
            spectrum,
            MeasurementChannel::Linear { sigma2: cfg.sigma2 },
            law,
        );
        let chart = se_chart_linear(&se_cfg, 1e-8 * cfg.power, 2000).map_err(|e| e.to_string())?;
        for (i, &(v_b2a, v_a2b)) in chart.module_a.iter().enumerate() {
            csv.push_str(&format!(
                "chart,{},{},module_a,{},{},{}\n",
                fmt_float(kappa),
                fmt_float(delta),
                i,
                fmt_float(v_a2b),
                fmt_float(v_b2a)
            ));
        }
        for (i, &(v_a2b, v_b2a)) in chart.module_b.iter().enumerate() {
            csv.push_str(&format!(
                "chart,{},{},module_b,{},{},{}\n",
                fmt_float(kappa),
                fmt_float(delta),
                i,
                fmt_float(v_a2b),
                fmt_float(v_b2a)
            ));
        }
        for (i, &(v_a2b, v_b2a)) in chart.trajectory.iter().enumerate() {
            csv.push_str(&format!(
                "chart,{},{},trajectory,{},{},{}\n",
                fmt_float(kappa),
                fmt_float(delta),
                i,
                fmt_float(v_a2b),
                fmt_float(v_b2a)
            ));
        }
        let final_v = chart.trajectory.last().map(|p| p.1).unwrap_or(f64::NAN);
        summary.push_str(&format!("{:<10} {:<10} {:<14.6e}\n", kappa, chart.crossings, final_v));
    }
    Ok((csv, summary))
}

/// Threshold table delta_*(kappa) plus the spectrum-optimized Jensen bound.
pub fn run_threshold(cfg: &ExperimentConfig) -> Result<(String, String), String> {
    let law = law_of(cfg);
    let u_min = law.u_min();
    let mut csv = String::from("mode,kappa,sigma2,u_min_sq,delta_star,jensen_bound\n");
    let bound = 2.0 * (1.0 + cfg.sigma2 / (u_min * u_min));
    let mut summary = String::from("kappa      delta_star\n");
    for &kappa in &cfg.kappas {
        let spectrum = limit_spectral_model(cfg.atoms, kappa).map_err(|e| e.to_string())?;
        let d = reconstruction_threshold(&spectrum, cfg.sigma2, u_min)
            .map_err(|e| e.to_string())?;
        csv.push_str(&format!(
            "threshold,{},{},{},{},{}\n",
            fmt_float(kappa),
            fmt_float(cfg.sigma2),
            fmt_float(u_min * u_min),
            fmt_float(d),
            fmt_float(bound)
        ));
        summary.push_str(&format!("{:<10} {:<14.9}\n", kappa, d));
    }
    summary.push_str(&format!("jensen bound (flat spectrum): {bound:.9}\n"));
    Ok((csv, summary))
}
