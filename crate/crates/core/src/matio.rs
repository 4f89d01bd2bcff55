//! Data model, matrix file I/O, and column standardization.
//!
//! A [`Dataset`] pairs an `n x p` predictor matrix with an `n x q` response
//! matrix. Predictor columns are standardized to a common L2-norm of `sqrt(n)`
//! (no centering; the fixed-design model has no intercept), and the per-column
//! divisors are kept so coefficients can be mapped back to the original scale.

use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Relative threshold below which a predictor column counts as zero.
pub const ZERO_COLUMN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MatError {
    #[error("column {0} of X has L2-norm below {ZERO_COLUMN_TOL} * sqrt(n)")]
    ZeroColumn(usize),
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("dataset is already standardized")]
    AlreadyStandardized,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid dataset shape: {0}")]
    InvalidShape(String),
    #[error("ragged rows: line {line} has {got} fields, expected {expected}")]
    RaggedRows {
        line: usize,
        got: usize,
        expected: usize,
    },
    #[error("parse error at line {line}, column {col}: {value:?}")]
    ParseError {
        line: usize,
        col: usize,
        value: String,
    },
    #[error("empty matrix file")]
    EmptyFile,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Text format for matrix files: comma- or tab-separated, '.' decimal,
/// row-major, optional single header row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Tsv,
}

impl MatrixFormat {
    fn delimiter(self) -> char {
        match self {
            MatrixFormat::Csv => ',',
            MatrixFormat::Tsv => '\t',
        }
    }
}

impl fmt::Display for MatrixFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixFormat::Csv => write!(f, "csv"),
            MatrixFormat::Tsv => write!(f, "tsv"),
        }
    }
}

/// Paired design matrix X (n x p) and response matrix Y (n x q) with
/// standardization metadata.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// Per-column divisors: `x_std[:, j] = x_orig[:, j] / col_scales[j]`.
    /// All ones until [`standardize`] is applied.
    pub col_scales: DVector<f64>,
    pub standardized: bool,
}

impl Dataset {
    /// Builds an unstandardized dataset, validating shapes and finiteness.
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self, MatError> {
        if x.nrows() < 2 {
            return Err(MatError::InvalidShape(format!(
                "need n >= 2 observations, got {}",
                x.nrows()
            )));
        }
        if x.ncols() < 1 || y.ncols() < 1 {
            return Err(MatError::InvalidShape("need p >= 1 and q >= 1".into()));
        }
        if x.nrows() != y.nrows() {
            return Err(MatError::DimensionMismatch(format!(
                "X has {} rows but Y has {} rows",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(MatError::NonFinite);
        }
        let p = x.ncols();
        Ok(Dataset {
            x,
            y,
            col_scales: DVector::from_element(p, 1.0),
            standardized: false,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }
}

/// Rescales every column of X to L2-norm `sqrt(n)`, recording the divisors.
/// Y is left untouched.
pub fn standardize(ds: &Dataset) -> Result<Dataset, MatError> {
    if ds.standardized {
        return Err(MatError::AlreadyStandardized);
    }
    let n = ds.n();
    let sqrt_n = (n as f64).sqrt();
    let mut x = ds.x.clone();
    let mut scales = DVector::zeros(ds.p());
    for j in 0..ds.p() {
        let norm = x.column(j).norm();
        if !norm.is_finite() {
            return Err(MatError::NonFinite);
        }
        if norm < ZERO_COLUMN_TOL * sqrt_n {
            return Err(MatError::ZeroColumn(j));
        }
        let scale = norm / sqrt_n;
        scales[j] = scale;
        let mut col = x.column_mut(j);
        col /= scale;
    }
    Ok(Dataset {
        x,
        y: ds.y.clone(),
        col_scales: scales,
        standardized: true,
    })
}

/// Maps a coefficient matrix fit on standardized predictors back to the
/// original predictor scale: row j is divided by `col_scales[j]`, so that
/// `X_orig * result == X_std * c_std` exactly.
pub fn destandardize_coef(
    c_std: &DMatrix<f64>,
    col_scales: &DVector<f64>,
) -> Result<DMatrix<f64>, MatError> {
    if c_std.nrows() != col_scales.len() {
        return Err(MatError::DimensionMismatch(format!(
            "coefficient matrix has {} rows but col_scales has length {}",
            c_std.nrows(),
            col_scales.len()
        )));
    }
    if col_scales.iter().any(|&s| s.is_nan() || s <= 0.0 || !s.is_finite()) {
        return Err(MatError::NonFinite);
    }
    let mut out = c_std.clone();
    for j in 0..out.nrows() {
        let s = col_scales[j];
        for k in 0..out.ncols() {
            out[(j, k)] /= s;
        }
    }
    Ok(out)
}

/// Loads a rectangular matrix from a CSV/TSV file. When `has_header` is set
/// the first line is skipped. Errors carry 1-based line/column positions.
pub fn load_matrix(
    path: impl AsRef<Path>,
    format: MatrixFormat,
    has_header: bool,
) -> Result<DMatrix<f64>, MatError> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text, format, has_header)
}

/// Parses matrix text; see [`load_matrix`].
pub fn parse_matrix(
    text: &str,
    format: MatrixFormat,
    has_header: bool,
) -> Result<DMatrix<f64>, MatError> {
    let delim = format.delimiter();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut expected = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if i == 0 && has_header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (c, field) in line.split(delim).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| MatError::ParseError {
                    line: line_no,
                    col: c + 1,
                    value: field.trim().to_string(),
                })?;
            row.push(v);
        }
        if let Some(e) = expected {
            if row.len() != e {
                return Err(MatError::RaggedRows {
                    line: line_no,
                    got: row.len(),
                    expected: e,
                });
            }
        } else {
            expected = Some(row.len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MatError::EmptyFile);
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}

/// Writes a matrix with 17 significant digits per value so a reload
/// reproduces every double exactly.
pub fn save_matrix(
    m: &DMatrix<f64>,
    path: impl AsRef<Path>,
    format: MatrixFormat,
    header: Option<&[String]>,
) -> Result<(), MatError> {
    let mut f = fs::File::create(path)?;
    f.write_all(format_matrix(m, format, header).as_bytes())?;
    Ok(())
}

/// Renders a matrix to CSV/TSV text; see [`save_matrix`].
pub fn format_matrix(m: &DMatrix<f64>, format: MatrixFormat, header: Option<&[String]>) -> String {
    let delim = format.delimiter();
    let mut out = String::new();
    if let Some(names) = header {
        out.push_str(&names.join(&delim.to_string()));
        out.push('\n');
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(delim);
            }
            out.push_str(&format_value(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// 17-significant-digit scientific rendering; round-trips f64 exactly.
pub fn format_value(v: f64) -> String {
    format!("{:.16e}", v)
}
