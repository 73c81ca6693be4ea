//! Reference reconstruction algorithms: FISTA for Lasso/GLasso, orthogonal
//! matching pursuit, and binary iterative hard thresholding.

use crate::error::{invalid, Result};
use crate::model::sign_pm1;
use crate::operator::SvdSensingOperator;

/// FISTA configuration for the objective `(1/2M) ||y - Ax||^2 + lambda ||x||_1`.
#[derive(Debug, Clone, Copy)]
pub struct LassoConfig {
    pub lambda: f64,
    pub max_iters: usize,
    /// Initial Lipschitz estimate for backtracking.
    pub initial_step: f64,
    /// Backtracking growth factor (> 1).
    pub backtrack_growth: f64,
    /// Gradient-based momentum restart.
    pub restart: bool,
}

impl LassoConfig {
    pub fn new(lambda: f64, max_iters: usize) -> Self {
        LassoConfig { lambda, max_iters, initial_step: 1.0, backtrack_growth: 2.0, restart: true }
    }
}

/// BIHT configuration.
#[derive(Debug, Clone, Copy)]
pub struct GreedyConfig {
    pub k: usize,
    pub max_iters: usize,
    pub step: f64,
}

impl GreedyConfig {
    pub fn new(k: usize, max_iters: usize) -> Self {
        GreedyConfig { k, max_iters, step: 1.0 }
    }
}

/// Proximal operator of `tau ||.||_1`.
pub fn soft_threshold(x: &[f64], tau: f64) -> Vec<f64> {
    debug_assert!(tau >= 0.0);
    x.iter().map(|&v| sign_pm1(v) * (v.abs() - tau).max(0.0)).collect()
}

#[derive(Debug, Clone)]
pub struct FistaOutput {
    /// Best-seen iterate by objective value.
    pub x_hat: Vec<f64>,
    /// Objective value per iteration (index 0 = initial point).
    pub objectives: Vec<f64>,
    pub best_objective: f64,
}

fn half_residual_sq(op: &SvdSensingOperator, y: &[f64], x: &[f64]) -> f64 {
    let ax = op.apply(x);
    let m = y.len() as f64;
    y.iter().zip(&ax).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * m)
}

/// FISTA with backtracking line search and gradient-based momentum restart.
pub fn fista(op: &SvdSensingOperator, y: &[f64], cfg: &LassoConfig) -> Result<FistaOutput> {
    if !(cfg.lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    if !(cfg.backtrack_growth > 1.0) || !(cfg.initial_step > 0.0) {
        return Err(invalid("backtracking parameters out of range"));
    }
    let n = op.n;
    let m = y.len() as f64;
    let l1 = |v: &[f64]| v.iter().map(|a| a.abs()).sum::<f64>();

    let mut x = vec![0.0; n];
    let mut momentum = x.clone();
    let mut theta = 1.0f64;
    let mut lip = cfg.initial_step;

    let mut objectives = vec![half_residual_sq(op, y, &x) + cfg.lambda * l1(&x)];
    let mut best = objectives[0];
    let mut best_x = x.clone();

    for _ in 0..cfg.max_iters {
        let a_mom = op.apply(&momentum);
        let resid: Vec<f64> = a_mom.iter().zip(y).map(|(a, b)| a - b).collect();
        let f_mom = resid.iter().map(|r| r * r).sum::<f64>() / (2.0 * m);
        let grad: Vec<f64> = op.apply_adjoint(&resid).iter().map(|g| g / m).collect();

        // backtracking: smallest tried L with sufficient decrease
        let mut x_new;
        let mut f_new;
        loop {
            let step = 1.0 / lip;
            let cand: Vec<f64> =
                momentum.iter().zip(&grad).map(|(v, g)| v - step * g).collect();
            x_new = soft_threshold(&cand, cfg.lambda * step);
            f_new = half_residual_sq(op, y, &x_new);
            let dx: Vec<f64> = x_new.iter().zip(&momentum).map(|(a, b)| a - b).collect();
            let quad = f_mom
                + grad.iter().zip(&dx).map(|(g, d)| g * d).sum::<f64>()
                + 0.5 * lip * dx.iter().map(|d| d * d).sum::<f64>();
            if f_new <= quad + 1e-12 * quad.abs().max(1.0) {
                break;
            }
            lip *= cfg.backtrack_growth;
        }

        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / theta_next;
        let mut momentum_next: Vec<f64> =
            x_new.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();

        // restart when the momentum direction opposes the step
        if cfg.restart {
            let dot: f64 = momentum
                .iter()
                .zip(&x_new)
                .zip(&x)
                .map(|((mo, xn), xo)| (mo - xn) * (xn - xo))
                .sum();
            if dot > 0.0 {
                theta = 1.0;
                momentum_next = x_new.clone();
            } else {
                theta = theta_next;
            }
        } else {
            theta = theta_next;
        }

        x = x_new;
        momentum = momentum_next;
        let obj = f_new + cfg.lambda * l1(&x);
        objectives.push(obj);
        if obj < best {
            best = obj;
            best_x = x.clone();
        }
    }
    Ok(FistaOutput { x_hat: best_x, objectives, best_objective: best })
}

/// GLasso: FISTA on the quadratic surrogate with the binary measurements as
/// the data vector. Outputs are only meaningful up to scale.
pub fn glasso(op: &SvdSensingOperator, y: &[f64], cfg: &LassoConfig) -> Result<FistaOutput> {
    fista(op, y, cfg)
}

/// Logarithmic lambda grid `[1e-4, 1] * max|A^T y| / M`.
pub fn lambda_grid(op: &SvdSensingOperator, y: &[f64], count: usize) -> Vec<f64> {
    let aty = op.apply_adjoint(y);
    let lam_max = aty.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) / y.len() as f64;
    let lam_max = if lam_max > 0.0 { lam_max } else { 1.0 };
    let lo = 1e-4 * lam_max;
    if count == 1 {
        return vec![lam_max];
    }
    let ratio = (lam_max / lo).powf(1.0 / (count as f64 - 1.0));
    let mut grid = Vec::with_capacity(count);
    let mut v = lo;
    for _ in 0..count {
        grid.push(v);
        v *= ratio;
    }
    grid
}

#[derive(Debug, Clone)]
pub struct OmpOutput {
    pub x_hat: Vec<f64>,
    /// Selected atoms in selection order.
    pub support: Vec<usize>,
    /// Set when a selected submatrix was numerically rank-deficient and the
    /// final coefficients came from a ridge-regularized solve.
    pub rank_deficient: bool,
}

/// Orthogonal matching pursuit with lazy column extraction and an
/// incrementally updated (modified Gram-Schmidt) QR factorization.
pub fn omp(op: &SvdSensingOperator, y: &[f64], k: usize) -> Result<OmpOutput> {
    if k == 0 || k > op.m {
        return Err(invalid(format!("OMP needs 1 <= k <= M, got k={k}, M={}", op.m)));
    }
    let m = op.m;
    let n = op.n;
    let mut selected = vec![false; n];
    let mut support = Vec::with_capacity(k);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut q_basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut r_mat: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residual = y.to_vec();
    let mut rank_deficient = false;

    for _ in 0..k {
        let scores = op.apply_adjoint(&residual);
        let mut best_idx = None;
        let mut best_val = -1.0;
        for (j, &s) in scores.iter().enumerate() {
            if !selected[j] && s.abs() > best_val {
                best_val = s.abs();
                best_idx = Some(j);
            }
        }
        let j = best_idx.expect("k <= M <= N guarantees a candidate");
        selected[j] = true;
        support.push(j);

        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = op.apply(&e);
        let col_norm_sq: f64 = col.iter().map(|v| v * v).sum();
        // orthogonalize against the current basis, one reorthogonalization pass
        let mut q = col.clone();
        let mut r_col = vec![0.0; q_basis.len() + 1];
        for _pass in 0..2 {
            for (bi, b) in q_basis.iter().enumerate() {
                let proj: f64 = q.iter().zip(b).map(|(a, c)| a * c).sum();
                r_col[bi] += proj;
                for (qi, bi_v) in q.iter_mut().zip(b) {
                    *qi -= proj * bi_v;
                }
            }
        }
        let q_norm: f64 = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if q_norm * q_norm <= 1e-24 * col_norm_sq.max(1e-300) {
            rank_deficient = true;
            r_col[q_basis.len()] = 0.0;
            columns.push(col);
            r_mat.push(r_col);
            // leave the basis unchanged; the residual cannot improve here
            continue;
        }
        r_col[q_basis.len()] = q_norm;
        for v in q.iter_mut() {
            *v /= q_norm;
        }
        let qr: f64 = q.iter().zip(&residual).map(|(a, b)| a * b).sum();
        for (res, qv) in residual.iter_mut().zip(&q) {
            *res -= qr * qv;
        }
        columns.push(col);
        q_basis.push(q);
        r_mat.push(r_col);
    }

    let mut x_hat = vec![0.0; n];
    if rank_deficient {
        // ridge-regularized normal equations on the selected columns
        let j = support.len();
        let mut gram = vec![vec![0.0; j]; j];
        let mut rhs = vec![0.0; j];
        for a in 0..j {
            for b in 0..j {
                gram[a][b] = columns[a].iter().zip(&columns[b]).map(|(p, q)| p * q).sum();
            }
            rhs[a] = columns[a].iter().zip(y).map(|(p, q)| p * q).sum();
        }
        let trace: f64 = (0..j).map(|i| gram[i][i]).sum();
        let ridge = 1e-10 * trace.max(1e-300) / j as f64;
        for (i, row) in gram.iter_mut().enumerate() {
            row[i] += ridge;
        }
        let coef = solve_dense(&mut gram, &mut rhs);
        for (idx, c) in support.iter().zip(coef) {
            x_hat[*idx] = c;
        }
    } else {
        // back-substitute R c = Q^T y
        let j = support.len();
        let qty: Vec<f64> = q_basis
            .iter()
            .map(|q| q.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect();
        let mut coef = vec![0.0; j];
        for row in (0..j).rev() {
            let mut acc = qty[row];
            for col in row + 1..j {
                acc -= r_mat[col][row] * coef[col];
            }
            coef[row] = acc / r_mat[row][row];
        }
        for (idx, c) in support.iter().zip(coef) {
            x_hat[*idx] = c;
        }
    }
    let _ = m;
    Ok(OmpOutput { x_hat, support, rank_deficient })
}

fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for row in col + 1..n {
            let f = a[row][col] / d;
            for t in col..n {
                a[row][t] -= f * a[col][t];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for t in row + 1..n {
            acc -= a[row][t] * x[t];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Keep the k largest-magnitude entries (ties broken by lowest index).
fn top_k(x: &mut [f64], k: usize) {
    if k >= x.len() {
        return;
    }
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let keep: std::collections::HashSet<usize> = idx[..k].iter().copied().collect();
    for (i, v) in x.iter_mut().enumerate() {
        if !keep.contains(&i) {
            *v = 0.0;
        }
    }
}

/// Binary iterative hard thresholding from the matched-filter start, with the
/// unit-normalized output convention of 1-bit reconstruction.
pub fn biht(op: &SvdSensingOperator, y: &[f64], cfg: &GreedyConfig) -> Result<Vec<f64>> {
    let mut x0: Vec<f64> =
        op.apply_adjoint(y).iter().map(|v| v / y.len() as f64).collect();
    top_k(&mut x0, cfg.k);
    biht_with_init(op, y, &x0, cfg)
}

/// BIHT from an explicit starting point.
pub fn biht_with_init(
    op: &SvdSensingOperator,
    y: &[f64],
    x0: &[f64],
    cfg: &GreedyConfig,
) -> Result<Vec<f64>> {
    if cfg.k == 0 {
        return Err(invalid("BIHT needs k >= 1"));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(invalid("BIHT expects 1-bit observations in {-1, +1}"));
    }
    let m = y.len() as f64;
    let mut x = x0.to_vec();
    for _ in 0..cfg.max_iters {
        let ax = op.apply(&x);
        let mismatch: Vec<f64> = ax.iter().zip(y).map(|(a, yv)| yv - sign_pm1(*a)).collect();
        let corr = op.apply_adjoint(&mismatch);
        for (xi, c) in x.iter_mut().zip(&corr) {
            *xi += cfg.step / m * c;
        }
        top_k(&mut x, cfg.k);
    }
    let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in x.iter_mut() {
            *v /= norm;
        }
    }
    Ok(x)
}
