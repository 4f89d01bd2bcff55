//! Univariate-response sparse regression engines.
//!
//! The Lasso objective throughout is
//!
//! ```text
//!     ||z - X u||^2 / (2n) + omega * ||u||_1
//! ```
//!
//! with every column of `X` standardized to L2-norm `sqrt(n)`, so each
//! coordinate update has unit Lipschitz constant and reduces to a single
//! soft-threshold. The scaled Lasso alternates this with the scale update
//! `sigma <- ||z - X u||_2 / sqrt(n)` and feeds `omega = sigma * omega0`
//! back into the Lasso, which solves
//!
//! ```text
//!     min_{u, sigma}  ||z - X u||^2 / (2 n sigma) + sigma / 2 + omega0 ||u||_1
//! ```
//!
//! by exact alternating minimization of a jointly convex objective. The
//! returned coefficients are therefore identical to a plain Lasso run at the
//! effective penalty `sigma_hat * omega0`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default coordinate-sweep tolerance on the max coefficient change.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default cap on full coordinate sweeps.
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Default tolerance for the scale fixed point.
pub const DEFAULT_TOL_SIGMA: f64 = 1e-8;
/// Default cap on scale/coefficient alternations.
pub const DEFAULT_MAX_OUTER: usize = 100;
/// Scale floor; hitting it flags the solve as degenerate.
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-6;
/// Allowed relative deviation of column norms from `sqrt(n)`.
pub const STANDARDIZATION_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("column {col} has L2-norm {norm:.6e}, expected sqrt(n) = {expected:.6e}")]
    NotStandardized { col: usize, norm: f64, expected: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in solver input")]
    NonFinite,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// Penalty level and iteration limits for [`lasso_cd`].
#[derive(Debug, Clone)]
pub struct LassoConfig {
    /// Penalty level omega (>= 0).
    pub omega: f64,
    /// Max full coordinate sweeps.
    pub max_iter: usize,
    /// Convergence tolerance on the max coefficient change per sweep.
    pub tol: f64,
}

impl LassoConfig {
    pub fn new(omega: f64) -> Self {
        LassoConfig {
            omega,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        if self.omega.is_nan() || self.omega < 0.0 {
            return Err(SolverError::InvalidConfig(format!(
                "omega must be >= 0, got {}",
                self.omega
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 || self.max_iter == 0 {
            return Err(SolverError::InvalidConfig(
                "tol must be > 0 and max_iter >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Lasso solution with convergence diagnostics. A hit iteration cap is not an
/// error: the best iterate comes back flagged `converged = false`.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub coef: DVector<f64>,
    pub iters: usize,
    pub converged: bool,
}

/// Scaled-lasso output: coefficients, equilibrium scale, and the effective
/// Lasso penalty `omega_eff = sigma_hat * omega0`.
#[derive(Debug, Clone)]
pub struct ScaledLassoResult {
    pub u_hat: DVector<f64>,
    pub sigma_hat: f64,
    pub omega_eff: f64,
    /// Outer (scale) iterations used.
    pub iters: usize,
    pub converged: bool,
    /// True when sigma_hat sits on the configured floor.
    pub degenerate: bool,
}

/// Options for [`scaled_lasso`]; defaults follow the module constants.
#[derive(Debug, Clone)]
pub struct ScaledLassoOptions {
    pub tol_sigma: f64,
    pub max_outer: usize,
    pub sigma_floor: f64,
    pub lasso_tol: f64,
    pub lasso_max_iter: usize,
}

impl Default for ScaledLassoOptions {
    fn default() -> Self {
        ScaledLassoOptions {
            tol_sigma: DEFAULT_TOL_SIGMA,
            max_outer: DEFAULT_MAX_OUTER,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            lasso_tol: DEFAULT_TOL,
            lasso_max_iter: DEFAULT_MAX_ITER,
        }
    }
}

fn check_inputs(z: &DVector<f64>, x: &DMatrix<f64>) -> Result<(), SolverError> {
    let n = x.nrows();
    if z.len() != n {
        return Err(SolverError::Dimension(format!(
            "z has length {} but X has {} rows",
            z.len(),
            n
        )));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NonFinite);
    }
    let sqrt_n = (n as f64).sqrt();
    let xs = x.as_slice();
    for j in 0..x.ncols() {
        let col = &xs[j * n..(j + 1) * n];
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - sqrt_n).abs() > STANDARDIZATION_TOL * sqrt_n {
            return Err(SolverError::NotStandardized {
                col: j,
                norm,
                expected: sqrt_n,
            });
        }
    }
    Ok(())
}

#[inline]
fn soft_threshold(v: f64, omega: f64) -> f64 {
    if v > omega {
        v - omega
    } else if v < -omega {
        v + omega
    } else {
        0.0
    }
}

/// Cyclic coordinate-descent Lasso on a standardized design.
///
/// Residuals are updated in place after every coordinate move; with
/// `||X_j||^2 / n = 1` the coordinate update is exactly
/// `u_j <- S(u_j + X_j^T r / n, omega)`. Between full passes the solver
/// iterates on the current active set until stable (coordinates always in
/// index order, so runs are bitwise reproducible); convergence is declared
/// only when a full pass moves no coordinate by more than `tol`.
pub fn lasso_cd(
    z: &DVector<f64>,
    x: &DMatrix<f64>,
    cfg: &LassoConfig,
    warm_start: Option<&DVector<f64>>,
) -> Result<LassoFit, SolverError> {
    cfg.validate()?;
    check_inputs(z, x)?;
    let (n, p) = (x.nrows(), x.ncols());
    if let Some(w) = warm_start {
        if w.len() != p {
            return Err(SolverError::Dimension(format!(
                "warm start has length {} but X has {} columns",
                w.len(),
                p
            )));
        }
    }
    let mut u: Vec<f64> = warm_start
        .map(|w| w.as_slice().to_vec())
        .unwrap_or_else(|| vec![0.0; p]);
    let xs = x.as_slice();
    // r = z - X u
    let mut r: Vec<f64> = z.as_slice().to_vec();
    for (j, &uj) in u.iter().enumerate() {
        if uj != 0.0 {
            let col = &xs[j * n..(j + 1) * n];
            for i in 0..n {
                r[i] -= col[i] * uj;
            }
        }
    }
    let nf = n as f64;
    let mut prev_obj = f64::INFINITY;
    let mut iters = 0;
    let mut converged = false;
    // one cyclic pass over the given coordinate subset; returns max change
    let sweep = |u: &mut [f64], r: &mut [f64], subset: &[usize]| -> f64 {
        let mut dmax = 0.0f64;
        for &j in subset {
            let col = &xs[j * n..(j + 1) * n];
            let mut dot = 0.0;
            for i in 0..n {
                dot += col[i] * r[i];
            }
            let old = u[j];
            let new = soft_threshold(old + dot / nf, cfg.omega);
            if new != old {
                let d = old - new;
                for i in 0..n {
                    r[i] += col[i] * d;
                }
                u[j] = new;
                dmax = dmax.max((new - old).abs());
            }
        }
        dmax
    };
    let all: Vec<usize> = (0..p).collect();
    'outer: while iters < cfg.max_iter {
        iters += 1;
        let dmax_full = sweep(&mut u, &mut r, &all);
        if cfg!(debug_assertions) {
            let rss: f64 = r.iter().map(|v| v * v).sum();
            let l1: f64 = u.iter().map(|v| v.abs()).sum();
            let obj = rss / (2.0 * nf) + cfg.omega * l1;
            debug_assert!(
                obj <= prev_obj * (1.0 + 1e-12) + 1e-12,
                "lasso objective increased across a sweep: {prev_obj} -> {obj}"
            );
            prev_obj = obj;
        }
        if dmax_full <= cfg.tol {
            converged = true;
            break;
        }
        // converge on the current active set before the next full pass;
        // every update is still a descent step in index order
        let active: Vec<usize> = (0..p).filter(|&j| u[j] != 0.0).collect();
        if active.len() < p {
            while iters < cfg.max_iter {
                iters += 1;
                if sweep(&mut u, &mut r, &active) <= cfg.tol {
                    continue 'outer;
                }
            }
        }
    }
    Ok(LassoFit {
        coef: DVector::from_vec(u),
        iters,
        converged,
    })
}

/// Scaled Lasso: alternates the scale update
/// `sigma <- max(sigma_floor, ||z - X u||_2 / sqrt(n))` with a Lasso solve at
/// `omega = sigma * omega0`, starting from `sigma = ||z||_2 / sqrt(n)`.
///
/// After the scale fixed point is reached the coefficients are re-solved once
/// at the converged `omega_eff`, so `u_hat` is bit-for-bit a plain Lasso
/// solution at `omega_eff = sigma_hat * omega0`.
pub fn scaled_lasso(
    z: &DVector<f64>,
    x: &DMatrix<f64>,
    omega0: f64,
    opts: &ScaledLassoOptions,
    warm_start: Option<&DVector<f64>>,
) -> Result<ScaledLassoResult, SolverError> {
    if omega0.is_nan() || omega0 <= 0.0 {
        return Err(SolverError::InvalidConfig(format!(
            "omega0 must be > 0, got {omega0}"
        )));
    }
    check_inputs(z, x)?;
    let n = x.nrows();
    let sqrt_n = (n as f64).sqrt();
    let resid_scale = |u: &DVector<f64>| -> f64 { (z - x * u).norm() / sqrt_n };

    let mut u = warm_start.cloned().unwrap_or_else(|| DVector::zeros(x.ncols()));
    let mut sigma = (z.norm() / sqrt_n).max(opts.sigma_floor);
    let mut converged = false;
    let mut iters = 0;
    for _ in 0..opts.max_outer {
        iters += 1;
        let mut cfg = LassoConfig::new(sigma * omega0);
        cfg.tol = opts.lasso_tol;
        cfg.max_iter = opts.lasso_max_iter;
        let fit = lasso_cd(z, x, &cfg, Some(&u))?;
        u = fit.coef;
        let sigma_new = resid_scale(&u).max(opts.sigma_floor);
        if (sigma_new - sigma).abs() <= opts.tol_sigma * sigma.max(1.0) {
            sigma = sigma_new;
            converged = true;
            break;
        }
        sigma = sigma_new;
    }
    // Final coefficient solve at the converged effective penalty keeps the
    // pair (u_hat, omega_eff) exactly Lasso-consistent.
    let omega_eff = sigma * omega0;
    let mut cfg = LassoConfig::new(omega_eff);
    cfg.tol = opts.lasso_tol;
    cfg.max_iter = opts.lasso_max_iter;
    let fit = lasso_cd(z, x, &cfg, Some(&u))?;
    let degenerate = sigma <= opts.sigma_floor;
    Ok(ScaledLassoResult {
        u_hat: fit.coef,
        sigma_hat: sigma,
        omega_eff,
        iters,
        converged: converged && fit.converged,
        degenerate,
    })
}

/// KKT certificate for a Lasso solution.
#[derive(Debug, Clone)]
pub struct KktReport {
    /// Worst excess of |X_j^T r| / n over omega among zero coordinates.
    pub max_violation_inactive: f64,
    /// Worst |X_j^T r / n - omega * sign(u_j)| among active coordinates.
    pub max_violation_active: f64,
    pub passes: bool,
}

/// Checks the Lasso subgradient conditions at `u` for penalty `omega`.
pub fn kkt_check(
    u: &DVector<f64>,
    z: &DVector<f64>,
    x: &DMatrix<f64>,
    omega: f64,
    tol_kkt: f64,
) -> KktReport {
    let n = x.nrows() as f64;
    let r = z - x * u;
    let g = x.transpose() * &r / n;
    let mut worst_inactive = 0.0f64;
    let mut worst_active = 0.0f64;
    for j in 0..u.len() {
        if u[j] == 0.0 {
            worst_inactive = worst_inactive.max(g[j].abs() - omega);
        } else {
            worst_active = worst_active.max((g[j] - omega * u[j].signum()).abs());
        }
    }
    let worst_inactive = worst_inactive.max(0.0);
    KktReport {
        max_violation_inactive: worst_inactive,
        max_violation_active: worst_active,
        passes: worst_inactive <= tol_kkt && worst_active <= tol_kkt,
    }
}

/// Universal penalty level used when the caller does not supply `omega0`:
/// `sqrt(2 log p / n)`, the standard scaled-lasso regularization scale.
pub fn default_omega0(n: usize, p: usize) -> f64 {
    (2.0 * (p.max(2) as f64).ln() / n as f64).sqrt()
}

/// Theoretical per-layer penalty `C~ * ((sqrt(n)+sqrt(q))/sqrt(nq)) * ((xi+1)/(xi-1))`.
/// Diagnostic only; the unknown constants are the caller's to choose.
pub fn theoretical_omega(n: usize, q: usize, c_tilde: f64, xi: f64) -> f64 {
    let (nf, qf) = (n as f64, q as f64);
    c_tilde * ((nf.sqrt() + qf.sqrt()) / (nf * qf).sqrt()) * ((xi + 1.0) / (xi - 1.0))
}
