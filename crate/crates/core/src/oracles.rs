//! Brute-force reference implementations used to verify the solvers.
//!
//! Everything here is deliberately independent of the coordinate-descent
//! path: the Lasso reference enumerates active-set sign patterns and solves
//! each stationarity system exactly, and the scaled-Lasso reference minimizes
//! the profiled objective over a refined scale grid. Exponential cost limits
//! them to small problems; they exist for tests and diagnostics only.

use nalgebra::{DMatrix, DVector};

/// Practical cap for the 3^p sign-pattern enumeration.
pub const ENUM_MAX_P: usize = 14;

/// Lasso objective `||z - X u||^2 / (2n) + omega ||u||_1`.
pub fn lasso_objective(z: &DVector<f64>, x: &DMatrix<f64>, u: &DVector<f64>, omega: f64) -> f64 {
    let n = x.nrows() as f64;
    let r = z - x * u;
    r.norm_squared() / (2.0 * n) + omega * u.iter().map(|v| v.abs()).sum::<f64>()
}

/// Global minimum of the Lasso objective by enumerating every active set and
/// sign pattern and solving the corresponding stationarity equations
/// `(X_A^T X_A) u_A = X_A^T z - n omega s_A`. Every candidate is a feasible
/// point, so the minimum over candidates equals the convex optimum, which is
/// attained at its own sign pattern.
pub fn lasso_min_objective_enumerated(z: &DVector<f64>, x: &DMatrix<f64>, omega: f64) -> f64 {
    let (n, p) = (x.nrows(), x.ncols());
    assert!(p <= ENUM_MAX_P, "enumeration limited to p <= {ENUM_MAX_P}");
    let nf = n as f64;
    let mut best = lasso_objective(z, x, &DVector::zeros(p), omega);
    for mask in 1usize..(1 << p) {
        let active: Vec<usize> = (0..p).filter(|j| mask & (1 << j) != 0).collect();
        let k = active.len();
        let mut xa = DMatrix::zeros(n, k);
        for (c, &j) in active.iter().enumerate() {
            xa.set_column(c, &x.column(j).into_owned());
        }
        let gram = xa.transpose() * &xa;
        let xtz = xa.transpose() * z;
        let lu = gram.lu();
        for sign_bits in 0..(1usize << k) {
            let mut rhs = xtz.clone();
            for (c, _) in active.iter().enumerate() {
                let s = if sign_bits & (1 << c) != 0 { -1.0 } else { 1.0 };
                rhs[c] -= nf * omega * s;
            }
            if let Some(ua) = lu.solve(&rhs) {
                let mut u = DVector::zeros(p);
                for (c, &j) in active.iter().enumerate() {
                    u[j] = ua[c];
                }
                let obj = lasso_objective(z, x, &u, omega);
                if obj < best {
                    best = obj;
                }
            }
        }
    }
    best
}

/// Scaled-lasso objective `||z - X u||^2 / (2 n sigma) + sigma / 2 + omega0 ||u||_1`.
pub fn scaled_lasso_objective(
    z: &DVector<f64>,
    x: &DMatrix<f64>,
    u: &DVector<f64>,
    sigma: f64,
    omega0: f64,
) -> f64 {
    let n = x.nrows() as f64;
    let r = z - x * u;
    r.norm_squared() / (2.0 * n * sigma) + sigma / 2.0 + omega0 * u.iter().map(|v| v.abs()).sum::<f64>()
}

/// Minimum of the scaled-lasso objective by profiling out `u` with the
/// enumerated Lasso at each grid scale and refining the grid around the
/// incumbent three times.
pub fn scaled_lasso_min_objective_grid(
    z: &DVector<f64>,
    x: &DMatrix<f64>,
    omega0: f64,
    sigma_floor: f64,
) -> f64 {
    let n = x.nrows() as f64;
    let sigma_bar = (z.norm() / n.sqrt()).max(sigma_floor);
    let profile = |sigma: f64| -> f64 {
        let best_lasso = lasso_min_objective_enumerated(z, x, sigma * omega0);
        // lasso objective at omega = sigma * omega0 equals
        // sigma * (quadratic/(2 n sigma) + omega0 ||u||_1); add sigma/2 back
        best_lasso / sigma + sigma / 2.0
    };
    let mut lo = (sigma_floor.max(1e-6 * sigma_bar)).ln();
    let mut hi = (4.0 * sigma_bar).ln();
    let mut best = f64::INFINITY;
    let mut best_t = lo;
    for _ in 0..4 {
        let grid = 32usize;
        for g in 0..=grid {
            let t = lo + (hi - lo) * g as f64 / grid as f64;
            let v = profile(t.exp().max(sigma_floor));
            if v < best {
                best = v;
                best_t = t;
            }
        }
        let width = (hi - lo) / grid as f64;
        lo = best_t - 2.0 * width;
        hi = best_t + 2.0 * width;
    }
    best
}
