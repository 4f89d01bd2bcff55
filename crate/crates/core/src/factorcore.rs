//! Sequential factor extraction, rank selection, and model assembly.
//!
//! The fitting pipeline:
//! 1. extract latent factors `z_k` (scaled to `||z_k|| = sqrt(n)`) and
//!    eigenvalues `lambda_k = s_k^2 / (n q)` from the thin SVD of `Y`, which
//!    carries the same spectrum as `Y Y^T / (n q)` without squaring the
//!    condition number;
//! 2. pick the rank minimizing `C(k) = sqrt(n) log L(k) + k log n`, where
//!    `L(k)` is the normalized residual after deflating k factor layers;
//! 3. regress each kept factor on the standardized predictors with the
//!    scaled Lasso and assemble `C_hat = sum_k u_k v_k^T`.

use crate::matio::Dataset;
use crate::solvers::{self, scaled_lasso, ScaledLassoOptions, SolverError};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on extracted layers when the caller does not set one.
pub const DEFAULT_R_MAX: usize = 50;
/// Relative eigenvalue cutoff used for the default tolerance level
/// `mu = MU_REL_DEFAULT * lambda_1`.
pub const MU_REL_DEFAULT: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("factor vector is not scaled to sqrt(n): norm {norm:.6e} vs {expected:.6e}")]
    BadFactorNorm { norm: f64, expected: f64 },
    #[error("dataset must be standardized before fitting")]
    NotStandardized,
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("series too short: need T > lag, got T = {t}, lag = {lag}")]
    InsufficientLength { t: usize, lag: usize },
    #[error("solver failed on layer {layer}: {source}")]
    Solver {
        layer: usize,
        #[source]
        source: SolverError,
    },
    #[error("dataset error: {0}")]
    Dataset(#[from] crate::matio::MatError),
}

/// One unit-rank component of the fit.
#[derive(Debug, Clone)]
pub struct Layer {
    /// Latent factor, `||z_hat||_2 = sqrt(n)`.
    pub z_hat: DVector<f64>,
    /// Eigenvalue of `Y Y^T / (n q)` for this factor.
    pub lambda_hat: f64,
    /// Right vector `Y^T z_hat / n`; absorbs the singular value.
    pub v_hat: DVector<f64>,
    /// Sparse left vector from the scaled Lasso.
    pub u_hat: DVector<f64>,
    /// Equilibrium scale of the layer regression.
    pub sigma_hat: f64,
    /// Scaled-lasso convergence flags for diagnostics.
    pub converged: bool,
    pub degenerate: bool,
}

/// Scale choice in the rank criterion: `sqrt(n) log L + k log n` (default) or
/// the `q`-based variant for q < n.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionVariant {
    #[default]
    NScale,
    QScale,
}

/// One row of the rank-selection trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TracePoint {
    pub k: usize,
    /// Normalized residual `L(k) = ||Y - Yhat_k||_F^2 / (n q)`.
    pub loss: f64,
    /// Criterion value `C(k)`; `-inf` marks an exact fit.
    pub criterion: f64,
}

/// Assembled sequential fit.
#[derive(Debug, Clone)]
pub struct SessFit {
    /// Layers 1..=r_hat, ordered by decreasing eigenvalue.
    pub layers: Vec<Layer>,
    pub r_hat: usize,
    /// Coefficient matrix on the standardized predictor scale.
    pub c_hat: DMatrix<f64>,
    pub criterion_trace: Vec<TracePoint>,
    /// Tolerance level actually used for factor extraction.
    pub mu: f64,
    pub omega0: f64,
    pub criterion_variant: CriterionVariant,
}

/// Ground truth bundle emitted by the generators and consumed by metrics.
#[derive(Debug, Clone)]
pub struct SimTruth {
    pub c_star: DMatrix<f64>,
    /// Left vectors, one column per layer.
    pub u_star: DMatrix<f64>,
    /// Right vectors scaled by the singular values.
    pub v_star: DMatrix<f64>,
    /// Nonzero index sets of the `u_star` columns.
    pub supports: Vec<Vec<usize>>,
    pub r_star: usize,
    /// Human-readable description of the noise law.
    pub noise: String,
}

impl SimTruth {
    /// Builds the truth bundle from factor matrices, with `c_star` formed as
    /// the exact product `u_star * v_star^T`.
    pub fn from_factors(u_star: DMatrix<f64>, v_star: DMatrix<f64>, noise: String) -> Self {
        let c_star = &u_star * v_star.transpose();
        let r_star = u_star.ncols();
        let supports = (0..r_star)
            .map(|k| {
                (0..u_star.nrows())
                    .filter(|&i| u_star[(i, k)].abs() > 1e-12)
                    .collect()
            })
            .collect();
        SimTruth {
            c_star,
            u_star,
            v_star,
            supports,
            r_star,
            noise,
        }
    }
}

/// Options for [`fit_sess`]; `None` fields fall back to the documented
/// defaults (`mu = 1e-3 * lambda_1`, `omega0 = sqrt(2 log p / n)`,
/// `r_max = min(n, q, 50)`).
#[derive(Debug, Clone, Default)]
pub struct SessOptions {
    pub mu: Option<f64>,
    pub omega0: Option<f64>,
    pub r_max: Option<usize>,
    pub criterion_variant: CriterionVariant,
    pub scaled_lasso: ScaledLassoOptions,
}

/// Top eigenpairs of `Y Y^T / (n q)` via the thin SVD of `Y`: factors are
/// `sqrt(n) * u_k` and eigenvalues `s_k^2 / (n q)`, sorted descending.
pub fn top_eigenpairs(
    y: &DMatrix<f64>,
    r_max: usize,
) -> Result<Vec<(DVector<f64>, f64)>, FactorError> {
    let (n, q) = (y.nrows(), y.ncols());
    if r_max > n.min(q) {
        return Err(FactorError::Dimension(format!(
            "r_max = {r_max} exceeds min(n, q) = {}",
            n.min(q)
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(FactorError::Dimension("Y contains non-finite entries".into()));
    }
    let svd = y.clone().svd(true, false);
    let u = svd.u.expect("svd requested u");
    let s = svd.singular_values;
    // nalgebra sorts descending; keep an explicit order for safety.
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let sqrt_n = (n as f64).sqrt();
    let nq = (n * q) as f64;
    Ok(order
        .into_iter()
        .take(r_max)
        .map(|k| {
            let z = DVector::from_column_slice(u.column(k).as_slice()) * sqrt_n;
            (z, s[k] * s[k] / nq)
        })
        .collect())
}

/// Right-vector estimate `v = Y^T z / n` for a factor scaled to `sqrt(n)`.
pub fn estimate_v(y: &DMatrix<f64>, z: &DVector<f64>) -> Result<DVector<f64>, FactorError> {
    let n = y.nrows();
    if z.len() != n {
        return Err(FactorError::Dimension(format!(
            "factor has length {} but Y has {} rows",
            z.len(),
            n
        )));
    }
    let sqrt_n = (n as f64).sqrt();
    let norm = z.norm();
    if (norm - sqrt_n).abs() > 1e-6 * sqrt_n {
        return Err(FactorError::BadFactorNorm {
            norm,
            expected: sqrt_n,
        });
    }
    Ok(y.transpose() * z / n as f64)
}

/// Rank selection over `k = 0..=eigenpairs.len()`.
///
/// `L(k)` is computed by deflating one layer at a time,
/// `L(k) = ||Y - sum_{j<=k} z_j v_j^T||_F^2 / (n q)`, which keeps small
/// residuals at full precision; the telescoping identity
/// `L(k-1) - L(k) = lambda_k` ties it to the eigenvalues and is enforced by
/// the test suite. An exact fit (`L = 0`) scores `-inf` and wins.
///
/// The saturated model `k = min(n, q)` is never a candidate: deflating every
/// eigen direction interpolates any `Y` to machine zero and `sqrt(n) log L`
/// would win tautologically.
pub fn select_rank(
    y: &DMatrix<f64>,
    eigenpairs: &[(DVector<f64>, f64)],
    variant: CriterionVariant,
) -> Result<(usize, Vec<TracePoint>), FactorError> {
    let (n, q) = (y.nrows(), y.ncols());
    let nq = (n * q) as f64;
    let k_cap = n.min(q).saturating_sub(1);
    let (scale, logdim) = match variant {
        CriterionVariant::NScale => ((n as f64).sqrt(), (n as f64).ln()),
        CriterionVariant::QScale => ((q as f64).sqrt(), (q as f64).ln()),
    };
    let crit = |loss: f64, k: usize| -> f64 {
        if loss <= 0.0 {
            f64::NEG_INFINITY
        } else {
            scale * loss.ln() + k as f64 * logdim
        }
    };
    let mut resid = y.clone();
    let mut trace = Vec::with_capacity(eigenpairs.len() + 1);
    let l0 = resid.norm_squared() / nq;
    trace.push(TracePoint {
        k: 0,
        loss: l0,
        criterion: crit(l0, 0),
    });
    for (k, (z, _)) in eigenpairs.iter().take(k_cap).enumerate() {
        let v = estimate_v(y, z)?;
        // resid -= z v^T
        for j in 0..q {
            let vj = v[j];
            if vj != 0.0 {
                for i in 0..n {
                    resid[(i, j)] -= z[i] * vj;
                }
            }
        }
        let l = resid.norm_squared() / nq;
        trace.push(TracePoint {
            k: k + 1,
            loss: l,
            criterion: crit(l, k + 1),
        });
        if l <= 0.0 {
            // exact fit; later candidates cannot improve
            break;
        }
    }
    let r_hat = trace
        .iter()
        .min_by(|a, b| a.criterion.partial_cmp(&b.criterion).unwrap())
        .map(|t| t.k)
        .unwrap_or(0);
    Ok((r_hat, trace))
}

/// Adds `u v^T` to `c` entrywise, skipping zero rows. Both the fitter and the
/// serialized-document assembly use this exact loop so the two agree bitwise.
fn accumulate_outer(c: &mut DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) {
    for j in 0..u.len() {
        let uj = u[j];
        if uj != 0.0 {
            for k in 0..v.len() {
                c[(j, k)] += uj * v[k];
            }
        }
    }
}

/// Full SESS fit on a standardized dataset.
pub fn fit_sess(ds: &Dataset, opts: &SessOptions) -> Result<SessFit, FactorError> {
    if !ds.standardized {
        return Err(FactorError::NotStandardized);
    }
    if let Some(mu) = opts.mu {
        if mu.is_nan() || mu < 0.0 {
            return Err(FactorError::InvalidOption(format!("mu must be >= 0, got {mu}")));
        }
    }
    if let Some(om) = opts.omega0 {
        if om.is_nan() || om <= 0.0 {
            return Err(FactorError::InvalidOption(format!(
                "omega0 must be > 0, got {om}"
            )));
        }
    }
    let (n, p, q) = (ds.n(), ds.p(), ds.q());
    let r_cap = n.min(q).min(DEFAULT_R_MAX).min(opts.r_max.unwrap_or(usize::MAX));
    let pairs = top_eigenpairs(&ds.y, r_cap)?;
    let lambda1 = pairs.first().map(|p| p.1).unwrap_or(0.0);
    let mu = opts.mu.unwrap_or(MU_REL_DEFAULT * lambda1);
    let kept: Vec<(DVector<f64>, f64)> = pairs.into_iter().filter(|&(_, l)| l > mu).collect();
    let (r_hat, trace) = select_rank(&ds.y, &kept, opts.criterion_variant)?;
    let omega0 = opts.omega0.unwrap_or_else(|| solvers::default_omega0(n, p));

    let mut layers = Vec::with_capacity(r_hat);
    let mut c_hat = DMatrix::zeros(p, q);
    let mut warm: Option<DVector<f64>> = None;
    for (k, (mut z, lambda)) in kept.into_iter().take(r_hat).enumerate() {
        let mut v = estimate_v(&ds.y, &z)?;
        // deterministic sign: largest-magnitude entry of v is positive
        let mut imax = 0;
        for j in 1..v.len() {
            if v[j].abs() > v[imax].abs() {
                imax = j;
            }
        }
        if v[imax] < 0.0 {
            z.neg_mut();
            v.neg_mut();
        }
        let res = scaled_lasso(&z, &ds.x, omega0, &opts.scaled_lasso, warm.as_ref())
            .map_err(|source| FactorError::Solver { layer: k + 1, source })?;
        accumulate_outer(&mut c_hat, &res.u_hat, &v);
        warm = Some(res.u_hat.clone());
        layers.push(Layer {
            z_hat: z,
            lambda_hat: lambda,
            v_hat: v,
            u_hat: res.u_hat,
            sigma_hat: res.sigma_hat,
            converged: res.converged,
            degenerate: res.degenerate,
        });
    }
    Ok(SessFit {
        layers,
        r_hat,
        c_hat,
        criterion_trace: trace,
        mu,
        omega0,
        criterion_variant: opts.criterion_variant,
    })
}

/// Out-of-sample prediction `X_new * C_hat`; `X_new` must be on the training
/// standardized scale.
pub fn predict(fit: &SessFit, x_new: &DMatrix<f64>) -> Result<DMatrix<f64>, FactorError> {
    if x_new.ncols() != fit.c_hat.nrows() {
        return Err(FactorError::Dimension(format!(
            "X_new has {} columns but the fit expects {}",
            x_new.ncols(),
            fit.c_hat.nrows()
        )));
    }
    Ok(x_new * &fit.c_hat)
}

/// Stacks a `T x q` series into the lagged design for the VAR reduction:
/// row `t` holds `(y(t-L), ..., y(t-1))` with response `y(t)`, giving
/// `n = T - L`, `p = L q`.
pub fn build_var_design(series: &DMatrix<f64>, lag: usize) -> Result<Dataset, FactorError> {
    let (t_len, q) = (series.nrows(), series.ncols());
    if lag == 0 || t_len <= lag {
        return Err(FactorError::InsufficientLength { t: t_len, lag });
    }
    let n = t_len - lag;
    let mut x = DMatrix::zeros(n, lag * q);
    let mut y = DMatrix::zeros(n, q);
    for i in 0..n {
        let t = lag + i;
        for l in 0..lag {
            for j in 0..q {
                x[(i, l * q + j)] = series[(t - lag + l, j)];
            }
        }
        for j in 0..q {
            y[(i, j)] = series[(t, j)];
        }
    }
    Ok(Dataset::new(x, y)?)
}

// ---------------------------------------------------------------------------
// Fit serialization

/// Sparse coefficient entry in the fit document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseEntry {
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerDoc {
    pub lambda_hat: f64,
    pub sigma_hat: f64,
    /// Nonzero entries of `u_hat` as index/value pairs.
    pub u_hat: Vec<SparseEntry>,
    pub v_hat: Vec<f64>,
}

/// JSON form of a fit: everything needed to rebuild `C_hat` and predict.
/// `col_scales` is attached by callers that own the standardization metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDocument {
    pub p: usize,
    pub q: usize,
    pub r_hat: usize,
    pub mu: f64,
    pub omega0: f64,
    pub criterion_variant: CriterionVariant,
    pub layers: Vec<LayerDoc>,
    pub criterion_trace: Vec<TracePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col_scales: Option<Vec<f64>>,
}

impl FitDocument {
    pub fn from_fit(fit: &SessFit, p: usize, q: usize, col_scales: Option<Vec<f64>>) -> Self {
        FitDocument {
            p,
            q,
            r_hat: fit.r_hat,
            mu: fit.mu,
            omega0: fit.omega0,
            criterion_variant: fit.criterion_variant,
            layers: fit
                .layers
                .iter()
                .map(|l| LayerDoc {
                    lambda_hat: l.lambda_hat,
                    sigma_hat: l.sigma_hat,
                    u_hat: l
                        .u_hat
                        .iter()
                        .enumerate()
                        .filter(|(_, &v)| v != 0.0)
                        .map(|(index, &value)| SparseEntry { index, value })
                        .collect(),
                    v_hat: l.v_hat.iter().copied().collect(),
                })
                .collect(),
            criterion_trace: fit.criterion_trace.clone(),
            col_scales,
        }
    }

    /// Re-assembles `C_hat = sum_k u_k v_k^T` on the standardized scale,
    /// bit-identical to the in-process fit's matrix.
    pub fn assemble_c_hat(&self) -> Result<DMatrix<f64>, FactorError> {
        let mut c = DMatrix::zeros(self.p, self.q);
        for layer in &self.layers {
            if layer.v_hat.len() != self.q {
                return Err(FactorError::Dimension(format!(
                    "layer v_hat has length {} but q = {}",
                    layer.v_hat.len(),
                    self.q
                )));
            }
            let mut u = DVector::zeros(self.p);
            for e in &layer.u_hat {
                if e.index >= self.p {
                    return Err(FactorError::Dimension(format!(
                        "u_hat index {} out of range for p = {}",
                        e.index, self.p
                    )));
                }
                u[e.index] = e.value;
            }
            let v = DVector::from_vec(layer.v_hat.clone());
            accumulate_outer(&mut c, &u, &v);
        }
        Ok(c)
    }
}
