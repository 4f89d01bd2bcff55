//! Reproducible synthetic-data generators for the two benchmark designs and a
//! synthetic VAR panel.
//!
//! All randomness flows through ChaCha12 keyed by the 64-bit config seed, with
//! one documented stream id per matrix (see the `STREAM_*` constants), so any
//! matrix can be re-drawn independently and identical seeds give identical
//! output bytes.

use crate::factorcore::SimTruth;
use crate::matio::Dataset;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal, StudentT, Uniform};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

/// Stream ids, one per generated matrix.
pub const STREAM_X: u64 = 1;
/// Seed coefficient matrix (positions, then values, interleaved per entry).
pub const STREAM_SEED_MATRIX: u64 = 2;
pub const STREAM_NOISE: u64 = 3;
pub const STREAM_U_STAR: u64 = 4;
pub const STREAM_V_STAR: u64 = 5;
pub const STREAM_COMPLETION: u64 = 6;
pub const STREAM_X1: u64 = 7;
pub const STREAM_X2: u64 = 8;
pub const STREAM_VAR_COEF: u64 = 9;
pub const STREAM_VAR_NOISE: u64 = 10;
pub const STREAM_VAR_INIT: u64 = 11;
pub const STREAM_TEST_X: u64 = 12;
pub const STREAM_TEST_NOISE: u64 = 13;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("completion matrix numerically rank-deficient (condition number {0:.3e})")]
    SingularCompletion(f64),
    #[error("VAR system unstable after {0} redraw attempts")]
    UnstableSystem(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Dataset(#[from] crate::matio::MatError),
}

/// ChaCha12 stream for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rows i.i.d. N(0, (rho^{|i-j|})) via the analytic Cholesky factor of the
/// AR(1) correlation: `x_0 = g_0`, `x_j = rho x_{j-1} + sqrt(1-rho^2) g_j`.
pub fn ar1_rows(rng: &mut ChaCha12Rng, n: usize, d: usize, rho: f64) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, d);
    let c = (1.0 - rho * rho).sqrt();
    for i in 0..n {
        let mut prev: f64 = StandardNormal.sample(rng);
        x[(i, 0)] = prev;
        for j in 1..d {
            let g: f64 = StandardNormal.sample(rng);
            prev = rho * prev + c * g;
            x[(i, j)] = prev;
        }
    }
    x
}

/// Dense AR(1) correlation matrix `(rho^{|i-j|})`.
pub fn ar1_correlation(dim: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| rho.powi((i as i32 - j as i32).abs()))
}

fn standard_normal_matrix(rng: &mut ChaCha12Rng, n: usize, d: usize) -> DMatrix<f64> {
    // row-major fill so the draw order is documented and stable
    let mut m = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            m[(i, j)] = StandardNormal.sample(rng);
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Simulation design 1

/// First benchmark design: AR(1) Gaussian predictors and noise, coefficient
/// matrix from an SVD-truncated sparse seed matrix with singular values
/// `100, 99, ..., 101 - r`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sim1Config {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    #[serde(default = "default_rho")]
    pub rho_x: f64,
    #[serde(default = "default_rho")]
    pub rho_e: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_nnz")]
    pub nnz_seed_count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_rho() -> f64 {
    0.5
}
fn default_gamma() -> f64 {
    0.1
}
fn default_nnz() -> usize {
    90
}

impl Sim1Config {
    pub fn new(n: usize, p: usize, q: usize, r: usize, seed: u64) -> Self {
        Sim1Config {
            n,
            p,
            q,
            r,
            rho_x: default_rho(),
            rho_e: default_rho(),
            gamma: default_gamma(),
            nnz_seed_count: default_nnz(),
            seed,
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        if self.n < 2 || self.p == 0 || self.q == 0 {
            return Err(GenError::Config("dimensions must be positive, n >= 2".into()));
        }
        if self.r > self.p.min(self.q) {
            return Err(GenError::Config(format!(
                "r = {} exceeds min(p, q) = {}",
                self.r,
                self.p.min(self.q)
            )));
        }
        for rho in [self.rho_x, self.rho_e] {
            if !(0.0..1.0).contains(&rho) {
                return Err(GenError::Config(format!("rho must be in [0, 1), got {rho}")));
            }
        }
        if self.gamma.is_nan() || self.gamma < 0.0 {
            return Err(GenError::Config("gamma must be >= 0".into()));
        }
        if self.nnz_seed_count < self.r || self.nnz_seed_count > self.p * self.q {
            return Err(GenError::Config(format!(
                "nnz_seed_count must lie in [r, p*q], got {}",
                self.nnz_seed_count
            )));
        }
        Ok(())
    }
}

/// Truncated-SVD truth factors for design 1, deterministic in the seed.
fn sim1_truth(cfg: &Sim1Config) -> SimTruth {
    let mut rng = stream_rng(cfg.seed, STREAM_SEED_MATRIX);
    let mut seed_matrix = DMatrix::zeros(cfg.p, cfg.q);
    let mut taken = HashSet::with_capacity(cfg.nnz_seed_count);
    while taken.len() < cfg.nnz_seed_count {
        let idx = rng.gen_range(0..cfg.p * cfg.q);
        if taken.insert(idx) {
            let value: f64 = StandardNormal.sample(&mut rng);
            seed_matrix[(idx % cfg.p, idx / cfg.p)] = value;
        }
    }
    let svd = seed_matrix.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let mut u_star = DMatrix::zeros(cfg.p, cfg.r);
    let mut v_star = DMatrix::zeros(cfg.q, cfg.r);
    for (k, &idx) in order.iter().take(cfg.r).enumerate() {
        let d = 100.0 - k as f64;
        u_star.set_column(k, &u.column(idx).into_owned());
        v_star.set_column(k, &(v_t.row(idx).transpose() * d));
    }
    SimTruth::from_factors(
        u_star,
        v_star,
        format!(
            "gaussian rows, cov = {} * AR1(rho = {})",
            cfg.gamma, cfg.rho_e
        ),
    )
}

/// Generates one design-1 dataset with its ground truth.
pub fn gen_sim1(cfg: &Sim1Config) -> Result<(Dataset, SimTruth), GenError> {
    cfg.validate()?;
    let truth = sim1_truth(cfg);
    let x = ar1_rows(&mut stream_rng(cfg.seed, STREAM_X), cfg.n, cfg.p, cfg.rho_x);
    let e = ar1_rows(&mut stream_rng(cfg.seed, STREAM_NOISE), cfg.n, cfg.q, cfg.rho_e)
        * cfg.gamma.sqrt();
    let y = &x * &truth.c_star + e;
    Ok((Dataset::new(x, y)?, truth))
}

/// Independent test sample of `m` rows under the same truth and noise law,
/// drawn from the dedicated test streams.
pub fn gen_sim1_test(cfg: &Sim1Config, m: usize) -> Result<(DMatrix<f64>, DMatrix<f64>), GenError> {
    cfg.validate()?;
    let truth = sim1_truth(cfg);
    let x = ar1_rows(&mut stream_rng(cfg.seed, STREAM_TEST_X), m, cfg.p, cfg.rho_x);
    let e = ar1_rows(&mut stream_rng(cfg.seed, STREAM_TEST_NOISE), m, cfg.q, cfg.rho_e)
        * cfg.gamma.sqrt();
    let y = &x * &truth.c_star + e;
    Ok((x, y))
}

// ---------------------------------------------------------------------------
// Simulation design 2

/// Second benchmark design: overlapping-support unit singular vectors,
/// conditionally Gaussian predictors, scaled-t(5) noise at a fixed
/// signal-to-noise ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sim2Config {
    #[serde(default = "default_sim2_n")]
    pub n: usize,
    #[serde(default = "default_sim2_p")]
    pub p: usize,
    #[serde(default = "default_sim2_q")]
    pub q: usize,
    #[serde(default = "default_d_star")]
    pub d_star: [f64; 3],
    #[serde(default = "default_sparsity")]
    pub s: [usize; 3],
    #[serde(default = "default_snr")]
    pub snr: f64,
    #[serde(default = "default_df")]
    pub df: f64,
    #[serde(default = "default_rho")]
    pub rho_x: f64,
    #[serde(default = "default_rho")]
    pub rho_e: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_sim2_n() -> usize {
    400
}
fn default_sim2_p() -> usize {
    500
}
fn default_sim2_q() -> usize {
    200
}
fn default_d_star() -> [f64; 3] {
    [60.0, 30.0, 10.0]
}
fn default_sparsity() -> [usize; 3] {
    [8, 9, 9]
}
fn default_snr() -> f64 {
    0.75
}
fn default_df() -> f64 {
    5.0
}

/// Support offsets for the left vectors.
const U_OFFSETS: [usize; 3] = [0, 5, 11];
/// Support offsets for the right vectors, each of length 5.
const V_OFFSETS: [usize; 3] = [0, 5, 10];
const V_SUPPORT: usize = 5;

impl Sim2Config {
    pub fn with_seed(seed: u64) -> Self {
        Sim2Config {
            seed,
            ..Sim2Config::default()
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        if self.n < 2 {
            return Err(GenError::Config("need n >= 2".into()));
        }
        for (j, (&off, &s)) in U_OFFSETS.iter().zip(self.s.iter()).enumerate() {
            if s == 0 || off + s > self.p {
                return Err(GenError::Config(format!(
                    "u support {j} (offset {off}, size {s}) does not fit in p = {}",
                    self.p
                )));
            }
        }
        if V_OFFSETS[2] + V_SUPPORT > self.q {
            return Err(GenError::Config(format!(
                "v supports need q >= 15, got {}",
                self.q
            )));
        }
        if self.snr.is_nan() || self.snr <= 0.0 || self.df.is_nan() || self.df <= 2.0 {
            return Err(GenError::Config("need snr > 0 and df > 2".into()));
        }
        if self.p <= 3 {
            return Err(GenError::Config("need p > r = 3".into()));
        }
        Ok(())
    }
}

impl Default for Sim2Config {
    fn default() -> Self {
        Sim2Config {
            n: default_sim2_n(),
            p: default_sim2_p(),
            q: default_sim2_q(),
            d_star: default_d_star(),
            s: default_sparsity(),
            snr: default_snr(),
            df: default_df(),
            rho_x: default_rho(),
            rho_e: default_rho(),
            seed: 0,
        }
    }
}

/// Symmetric PSD square root via the spectral decomposition.
fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut vals = eig.eigenvalues;
    for v in vals.iter_mut() {
        *v = v.max(0.0).sqrt();
    }
    let scaled = {
        let mut q = eig.eigenvectors.clone();
        for (j, &s) in vals.iter().enumerate() {
            let mut col = q.column_mut(j);
            col *= s;
        }
        q
    };
    scaled * eig.eigenvectors.transpose()
}

struct Sim2Parts {
    u_star: DMatrix<f64>,
    /// Unit right vectors (singular values not yet absorbed).
    v_unit: DMatrix<f64>,
    p_mat: DMatrix<f64>,
    s11_inv_s12: DMatrix<f64>,
    chol_cond: DMatrix<f64>,
    sig_e_sqrt: DMatrix<f64>,
}

/// Deterministic pieces of the design-2 construction (no n-row draws yet).
fn sim2_parts(cfg: &Sim2Config) -> Result<Sim2Parts, GenError> {
    let r = 3usize;
    let (p, q) = (cfg.p, cfg.q);
    // left vectors: entries uniform on {1, -1} at the offsets, then normalized
    let mut rng_u = stream_rng(cfg.seed, STREAM_U_STAR);
    let mut u_star = DMatrix::zeros(p, r);
    for j in 0..r {
        let mut col = DVector::zeros(p);
        for i in 0..cfg.s[j] {
            col[U_OFFSETS[j] + i] = if rng_u.gen::<bool>() { 1.0 } else { -1.0 };
        }
        col /= col.norm();
        u_star.set_column(j, &col);
    }
    // right vectors: entries uniform on [-1,-0.3] U [0.3,1] at the offsets
    let mut rng_v = stream_rng(cfg.seed, STREAM_V_STAR);
    let mag = Uniform::new_inclusive(0.3, 1.0);
    let mut v_unit = DMatrix::zeros(q, r);
    for j in 0..r {
        let mut col = DVector::zeros(q);
        for i in 0..V_SUPPORT {
            let m: f64 = mag.sample(&mut rng_v);
            let sign = if rng_v.gen::<bool>() { 1.0 } else { -1.0 };
            col[V_OFFSETS[j] + i] = sign * m;
        }
        col /= col.norm();
        v_unit.set_column(j, &col);
    }
    // completion U_perp: QR of a Gaussian block projected off span(U*)
    let mut rng_c = stream_rng(cfg.seed, STREAM_COMPLETION);
    let g = standard_normal_matrix(&mut rng_c, p, p - r);
    let gram = u_star.transpose() * &u_star;
    let gram_eig = nalgebra::SymmetricEigen::new(gram.clone());
    let lam_min: f64 = gram_eig.eigenvalues.min();
    let lam_max: f64 = gram_eig.eigenvalues.max();
    if lam_min <= 0.0 || (lam_max / lam_min).sqrt() > 1e12 {
        return Err(GenError::SingularCompletion(if lam_min <= 0.0 {
            f64::INFINITY
        } else {
            (lam_max / lam_min).sqrt()
        }));
    }
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| GenError::Numerical("singular u_star gram".into()))?;
    let proj_coef = gram_inv * (u_star.transpose() * &g);
    let g_perp = &g - &u_star * proj_coef;
    let qr = g_perp.qr();
    let u_perp = qr.q();
    let mut p_mat = DMatrix::zeros(p, p);
    p_mat.view_mut((0, 0), (p, r)).copy_from(&u_star);
    p_mat.view_mut((0, r), (p, p - r)).copy_from(&u_perp);
    // covariance blocks in the P-rotated coordinates
    let sigma_x = ar1_correlation(p, cfg.rho_x);
    let s_rot = p_mat.transpose() * (&sigma_x * &p_mat);
    let s11 = s_rot.view((0, 0), (r, r)).into_owned();
    let s12 = s_rot.view((0, r), (r, p - r)).into_owned();
    let s22 = s_rot.view((r, r), (p - r, p - r)).into_owned();
    let s11_inv = s11
        .try_inverse()
        .ok_or_else(|| GenError::Numerical("singular S11 block".into()))?;
    let s11_inv_s12 = &s11_inv * &s12;
    let cond_cov = &s22 - s12.transpose() * &s11_inv_s12;
    let chol_cond = nalgebra::Cholesky::new(cond_cov)
        .ok_or_else(|| GenError::Numerical("conditional covariance not positive definite".into()))?
        .l();
    let sig_e_sqrt = sym_sqrt(&ar1_correlation(q, cfg.rho_e));
    Ok(Sim2Parts {
        u_star,
        v_unit,
        p_mat,
        s11_inv_s12,
        chol_cond,
        sig_e_sqrt,
    })
}

fn sim2_sample_x(
    parts: &Sim2Parts,
    cfg: &Sim2Config,
    n: usize,
    stream_factors: u64,
    stream_rest: u64,
) -> Result<(DMatrix<f64>, DMatrix<f64>), GenError> {
    let r = 3usize;
    let p = cfg.p;
    let x1 = standard_normal_matrix(&mut stream_rng(cfg.seed, stream_factors), n, r);
    let w = standard_normal_matrix(&mut stream_rng(cfg.seed, stream_rest), n, p - r);
    let x2 = &x1 * &parts.s11_inv_s12 + &w * parts.chol_cond.transpose();
    let mut joint = DMatrix::zeros(n, p);
    joint.view_mut((0, 0), (n, r)).copy_from(&x1);
    joint.view_mut((0, r), (n, p - r)).copy_from(&x2);
    // X = (X1, X2) P^{-1}  <=>  P^T X^T = (X1, X2)^T
    let lu = parts.p_mat.transpose().lu();
    let xt = lu
        .solve(&joint.transpose())
        .ok_or_else(|| GenError::Numerical("P not invertible".into()))?;
    Ok((xt.transpose(), x1))
}

fn sim2_noise(
    parts: &Sim2Parts,
    cfg: &Sim2Config,
    n: usize,
    stream: u64,
) -> Result<DMatrix<f64>, GenError> {
    let t = StudentT::new(cfg.df)
        .map_err(|e| GenError::Config(format!("invalid t degrees of freedom: {e}")))?;
    let unit_var = ((cfg.df - 2.0) / cfg.df).sqrt();
    let mut rng = stream_rng(cfg.seed, stream);
    let mut e = DMatrix::zeros(n, cfg.q);
    for i in 0..n {
        for j in 0..cfg.q {
            e[(i, j)] = t.sample(&mut rng) * unit_var;
        }
    }
    Ok(e * &parts.sig_e_sqrt)
}

fn sim2_generate(
    cfg: &Sim2Config,
) -> Result<(Dataset, SimTruth, Sim2Parts, f64), GenError> {
    cfg.validate()?;
    let parts = sim2_parts(cfg)?;
    let (x, x1) = sim2_sample_x(&parts, cfg, cfg.n, STREAM_X1, STREAM_X2)?;
    let e0 = sim2_noise(&parts, cfg, cfg.n, STREAM_NOISE)?;
    // noise level solved from the realized draws:
    // snr = || d_r * (X u_r) v_r^T ||_F / || sigma * E0 ||_F
    let d_last = cfg.d_star[2];
    let signal = d_last * x1.column(2).norm(); // ||v_unit|| = 1
    let sigma = signal / (cfg.snr * e0.norm());
    let mut v_star = parts.v_unit.clone();
    for j in 0..3 {
        let mut col = v_star.column_mut(j);
        col *= cfg.d_star[j];
    }
    let truth = SimTruth::from_factors(
        parts.u_star.clone(),
        v_star,
        format!(
            "scaled t({}) rows, cov = sigma^2 * AR1(rho = {}), sigma = {sigma:.6e}, snr = {}",
            cfg.df, cfg.rho_e, cfg.snr
        ),
    );
    let y = &x * &truth.c_star + e0 * sigma;
    Ok((Dataset::new(x, y)?, truth, parts, sigma))
}

/// Generates one design-2 dataset with its ground truth.
pub fn gen_sim2(cfg: &Sim2Config) -> Result<(Dataset, SimTruth), GenError> {
    let (ds, truth, _, _) = sim2_generate(cfg)?;
    Ok((ds, truth))
}

/// Realized noise level implied by the seed (the generator solves it from the
/// training draws so the realized SNR is exact).
pub fn sim2_sigma(cfg: &Sim2Config) -> Result<f64, GenError> {
    sim2_generate(cfg).map(|(_, _, _, s)| s)
}

/// Independent design-2 test sample of `m` rows under the training truth and
/// the training noise level.
pub fn gen_sim2_test(cfg: &Sim2Config, m: usize) -> Result<(DMatrix<f64>, DMatrix<f64>), GenError> {
    let (_, truth, parts, sigma) = sim2_generate(cfg)?;
    let (x, _) = sim2_sample_x(&parts, cfg, m, STREAM_TEST_X, STREAM_TEST_NOISE)?;
    // test noise stream must differ from the test X streams
    let e0 = sim2_noise(&parts, cfg, m, STREAM_NOISE + 100)?;
    let y = &x * &truth.c_star + e0 * sigma;
    Ok((x, y))
}

// ---------------------------------------------------------------------------
// Synthetic VAR panel

/// Stacked VAR(L) coefficients and the realized companion spectral radius.
#[derive(Debug, Clone)]
pub struct VarTruth {
    /// `(L q) x q` stacked matrix `(C_1^T, ..., C_L^T)^T`.
    pub c_stacked: DMatrix<f64>,
    pub lag: usize,
    pub spectral_radius: f64,
}

const VAR_MAX_REDRAWS: usize = 50;
const VAR_BURN_IN: usize = 200;
const VAR_RADIUS_LIMIT: f64 = 0.95;

fn companion_radius(lag_mats: &[DMatrix<f64>], q: usize) -> f64 {
    let l = lag_mats.len();
    let dim = l * q;
    let mut a = DMatrix::zeros(dim, dim);
    for (i, c) in lag_mats.iter().enumerate() {
        a.view_mut((0, i * q), (q, q)).copy_from(&c.transpose());
    }
    for i in 1..l {
        for j in 0..q {
            a[(i * q + j, (i - 1) * q + j)] = 1.0;
        }
    }
    a.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Generates a stable low-rank sparse VAR(L) and simulates `t_len` steps
/// after a 200-step burn-in.
pub fn gen_var(
    q: usize,
    t_len: usize,
    r: usize,
    lag: usize,
    noise_scale: f64,
    seed: u64,
) -> Result<(DMatrix<f64>, VarTruth), GenError> {
    if q == 0 || lag == 0 || t_len <= lag {
        return Err(GenError::Config(
            "need q >= 1, lag >= 1, and t_len > lag".into(),
        ));
    }
    if r == 0 || r > q {
        return Err(GenError::Config(format!("need 1 <= r <= q, got r = {r}")));
    }
    if noise_scale.is_nan() || noise_scale < 0.0 {
        return Err(GenError::Config("noise_scale must be >= 0".into()));
    }
    let mut rng = stream_rng(seed, STREAM_VAR_COEF);
    let support = q.min(3);
    let mut lag_mats = Vec::new();
    let mut radius = f64::INFINITY;
    let mut attempts = 0;
    while attempts < VAR_MAX_REDRAWS {
        attempts += 1;
        lag_mats.clear();
        for i in 0..lag {
            // decaying low-rank sparse lag matrix
            let mut c = DMatrix::zeros(q, q);
            let scale = 0.5 * 0.6f64.powi(i as i32) / (r as f64).sqrt();
            for _ in 0..r {
                let mut a = DVector::zeros(q);
                let mut b = DVector::zeros(q);
                for _ in 0..support {
                    let ia = rng.gen_range(0..q);
                    let ib = rng.gen_range(0..q);
                    let va: f64 = StandardNormal.sample(&mut rng);
                    let vb: f64 = StandardNormal.sample(&mut rng);
                    a[ia] = va;
                    b[ib] = vb;
                }
                let na = a.norm();
                let nb = b.norm();
                if na > 0.0 && nb > 0.0 {
                    c += (&a / na) * (&b / nb).transpose() * scale;
                }
            }
            lag_mats.push(c);
        }
        radius = companion_radius(&lag_mats, q);
        if radius < VAR_RADIUS_LIMIT {
            break;
        }
    }
    if radius >= VAR_RADIUS_LIMIT {
        return Err(GenError::UnstableSystem(VAR_MAX_REDRAWS));
    }
    // simulate with burn-in
    let mut init_rng = stream_rng(seed, STREAM_VAR_INIT);
    let mut noise_rng = stream_rng(seed, STREAM_VAR_NOISE);
    let mut history: Vec<DVector<f64>> = (0..lag)
        .map(|_| {
            DVector::from_fn(q, |_, _| {
                let g: f64 = StandardNormal.sample(&mut init_rng);
                g
            })
        })
        .collect();
    let mut series = DMatrix::zeros(t_len, q);
    for step in 0..(VAR_BURN_IN + t_len) {
        let mut next = DVector::zeros(q);
        for (i, c) in lag_mats.iter().enumerate() {
            // y(t) += C_i^T y(t - i - 1); history back = most recent
            next += c.transpose() * &history[lag - 1 - i];
        }
        if noise_scale > 0.0 {
            for j in 0..q {
                let g: f64 = StandardNormal.sample(&mut noise_rng);
                next[j] += noise_scale * g;
            }
        }
        history.remove(0);
        history.push(next.clone());
        if step >= VAR_BURN_IN {
            series.set_row(step - VAR_BURN_IN, &next.transpose());
        }
    }
    let mut c_stacked = DMatrix::zeros(lag * q, q);
    for (i, c) in lag_mats.iter().enumerate() {
        c_stacked
            .view_mut((i * q, 0), (q, q))
            .copy_from(&c.transpose());
    }
    Ok((
        series,
        VarTruth {
            c_stacked,
            lag,
            spectral_radius: radius,
        },
    ))
}
