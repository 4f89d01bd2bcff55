//! Scoring of fits against ground truth and held-out data.
//!
//! FNR/FPR are reported as percentages over the p x r* sparsity pattern of
//! the left-vector matrices, layers matched by eigenvalue order; an entry
//! counts as positive when its magnitude exceeds 1e-12.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Magnitude above which an entry counts as nonzero in selection scoring.
pub const POSITIVE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("zero denominator: {0}")]
    ZeroDenominator(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("truth matrix has no nonzero entries")]
    DegenerateTruth,
}

/// One scored fit. Truth-dependent fields are `None` when no ground truth
/// was supplied; `fnr`/`fpr` are percentages (see module docs).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreReport {
    pub pe: f64,
    pub ee: Option<f64>,
    pub re: Option<usize>,
    pub fnr: Option<f64>,
    pub fpr: Option<f64>,
    /// Averaged per-column R^2 of the prediction built from the first k
    /// layers, k = 1..=r_hat.
    pub r2_per_factor: Vec<f64>,
    pub forecast_error: f64,
    pub elapsed_seconds: f64,
    /// Units note for the selection rates.
    pub fnr_fpr_units: String,
}

impl ScoreReport {
    pub fn units_note() -> String {
        "percent".to_string()
    }
}

/// Normalized prediction error `||Y - X C|| _F / ||Y||_F`.
pub fn pe(y_test: &DMatrix<f64>, x_test: &DMatrix<f64>, c_hat: &DMatrix<f64>) -> Result<f64, MetricError> {
    if x_test.ncols() != c_hat.nrows() || y_test.nrows() != x_test.nrows()
        || y_test.ncols() != c_hat.ncols()
    {
        return Err(MetricError::Dimension(format!(
            "pe: X is {}x{}, C is {}x{}, Y is {}x{}",
            x_test.nrows(),
            x_test.ncols(),
            c_hat.nrows(),
            c_hat.ncols(),
            y_test.nrows(),
            y_test.ncols()
        )));
    }
    let denom = y_test.norm();
    if denom == 0.0 {
        return Err(MetricError::ZeroDenominator("||Y_test||_F".into()));
    }
    Ok((y_test - x_test * c_hat).norm() / denom)
}

/// Normalized estimation error `||C_hat - C*||_F / ||C*||_F`.
pub fn ee(c_hat: &DMatrix<f64>, c_star: &DMatrix<f64>) -> Result<f64, MetricError> {
    if c_hat.shape() != c_star.shape() {
        return Err(MetricError::Dimension(format!(
            "ee: {}x{} vs {}x{}",
            c_hat.nrows(),
            c_hat.ncols(),
            c_star.nrows(),
            c_star.ncols()
        )));
    }
    let denom = c_star.norm();
    if denom == 0.0 {
        return Err(MetricError::ZeroDenominator("||C*||_F".into()));
    }
    Ok((c_hat - c_star).norm() / denom)
}

/// Rank recovery error `|r_hat - r*|`.
pub fn re(r_hat: usize, r_star: usize) -> usize {
    r_hat.abs_diff(r_star)
}

/// False negative / false positive selection rates (percent) over all
/// `p * r*` positions of the left-vector matrices. Layers are matched by
/// order; the caller pads missing layers with zero columns.
pub fn selection_rates(
    u_hat: &DMatrix<f64>,
    u_star: &DMatrix<f64>,
) -> Result<(f64, f64), MetricError> {
    if u_hat.shape() != u_star.shape() {
        return Err(MetricError::Dimension(format!(
            "selection_rates: {}x{} vs {}x{}",
            u_hat.nrows(),
            u_hat.ncols(),
            u_star.nrows(),
            u_star.ncols()
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (a, b) in u_hat.iter().zip(u_star.iter()) {
        let got = a.abs() > POSITIVE_TOL;
        let want = b.abs() > POSITIVE_TOL;
        match (got, want) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    if tp + fn_ == 0 {
        return Err(MetricError::DegenerateTruth);
    }
    debug_assert_eq!(tp + fp + tn + fn_, u_hat.nrows() * u_hat.ncols());
    let fnr = 100.0 * fn_ as f64 / (fn_ + tp) as f64;
    let fpr = if fp + tn == 0 {
        0.0
    } else {
        100.0 * fp as f64 / (fp + tn) as f64
    };
    Ok((fnr, fpr))
}

/// Per-column R^2 with a column-mean baseline. Zero-variance columns are
/// excluded from the first list and reported by index in the second.
pub fn r2_per_column(
    y_test: &DMatrix<f64>,
    yhat_test: &DMatrix<f64>,
) -> Result<(Vec<f64>, Vec<usize>), MetricError> {
    if y_test.shape() != yhat_test.shape() {
        return Err(MetricError::Dimension(format!(
            "r2: {}x{} vs {}x{}",
            y_test.nrows(),
            y_test.ncols(),
            yhat_test.nrows(),
            yhat_test.ncols()
        )));
    }
    let n = y_test.nrows() as f64;
    let mut values = Vec::new();
    let mut excluded = Vec::new();
    for j in 0..y_test.ncols() {
        let col = y_test.column(j);
        let mean = col.sum() / n;
        let tss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        if tss == 0.0 {
            excluded.push(j);
            continue;
        }
        let rss: f64 = col
            .iter()
            .zip(yhat_test.column(j).iter())
            .map(|(y, yh)| (y - yh) * (y - yh))
            .sum();
        values.push(1.0 - rss / tss);
    }
    Ok((values, excluded))
}

/// Averaged forecast error `||Y - X C||_F^2 / (n q)`.
pub fn forecast_error(
    y: &DMatrix<f64>,
    x: &DMatrix<f64>,
    c_hat: &DMatrix<f64>,
) -> Result<f64, MetricError> {
    if x.ncols() != c_hat.nrows() || y.nrows() != x.nrows() || y.ncols() != c_hat.ncols() {
        return Err(MetricError::Dimension("forecast_error shapes disagree".into()));
    }
    let nq = (y.nrows() * y.ncols()) as f64;
    Ok((y - x * c_hat).norm_squared() / nq)
}

/// Numerical rank at the relative threshold `rel_tol * s_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let svals = m.clone().svd(false, false).singular_values;
    let top = svals.max();
    if top <= 0.0 {
        return 0;
    }
    svals.iter().filter(|&&s| s > rel_tol * top).count()
}
