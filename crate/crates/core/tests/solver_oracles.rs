//! Solver outputs checked against the independent brute-force references.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use sess_core::oracles::{
    lasso_min_objective_enumerated, lasso_objective, scaled_lasso_min_objective_grid,
    scaled_lasso_objective,
};
use sess_core::solvers::{
    kkt_check, lasso_cd, scaled_lasso, LassoConfig, ScaledLassoOptions, DEFAULT_TOL,
};

fn standardized_design(rng: &mut ChaCha12Rng, n: usize, p: usize) -> DMatrix<f64> {
    let mut x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng));
    let sqrt_n = (n as f64).sqrt();
    for j in 0..p {
        let norm = x.column(j).norm();
        let mut c = x.column_mut(j);
        c *= sqrt_n / norm;
    }
    x
}

fn sparse_signal(rng: &mut ChaCha12Rng, p: usize, nnz: usize) -> DVector<f64> {
    let mut u = DVector::zeros(p);
    for k in 0..nnz {
        let j = (k * 7 + 1) % p;
        let v: f64 = StandardNormal.sample(rng);
        u[j] = v + v.signum() * 0.3;
    }
    u
}

#[test]
fn lasso_cd_matches_enumeration_oracle() {
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    for trial in 0..10 {
        let (n, p) = (30, 10);
        let x = standardized_design(&mut rng, n, p);
        let u_star = sparse_signal(&mut rng, p, 3);
        let noise = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let z = &x * &u_star + noise * 0.5;
        let omega = 0.1;
        let fit = lasso_cd(&z, &x, &LassoConfig::new(omega), None).unwrap();
        assert!(fit.converged);
        let got = lasso_objective(&z, &x, &fit.coef, omega);
        let want = lasso_min_objective_enumerated(&z, &x, omega);
        assert!(
            (got - want).abs() <= 1e-6 * (1.0 + want.abs()),
            "trial {trial}: cd objective {got} vs oracle {want}"
        );
        // the oracle can never beat a feasible point by more than solver noise
        assert!(got >= want - 1e-9);
    }
}

#[test]
fn scaled_lasso_matches_grid_oracle() {
    let mut rng = ChaCha12Rng::seed_from_u64(32);
    for trial in 0..6 {
        let (n, p) = (50, 8);
        let x = standardized_design(&mut rng, n, p);
        let u_star = sparse_signal(&mut rng, p, 2) * 1.5;
        let noise = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let z = &x * &u_star + noise;
        let omega0 = 0.3;
        let opts = ScaledLassoOptions::default();
        let res = scaled_lasso(&z, &x, omega0, &opts, None).unwrap();
        assert!(res.converged, "trial {trial} did not converge");
        let got = scaled_lasso_objective(&z, &x, &res.u_hat, res.sigma_hat, omega0);
        let want = scaled_lasso_min_objective_grid(&z, &x, omega0, opts.sigma_floor);
        assert!(
            (got - want).abs() <= 1e-6 * (1.0 + want.abs()),
            "trial {trial}: alternation objective {got} vs grid oracle {want}"
        );
    }
}

#[test]
fn scaled_lasso_equivalence_and_kkt_batch() {
    // converged scaled-lasso output re-solves as a plain lasso at omega_eff
    // and certifies against the subgradient conditions
    let mut rng = ChaCha12Rng::seed_from_u64(33);
    for trial in 0..20 {
        let n = 30 + (trial % 4) * 10;
        let p = 20 + (trial % 5) * 20;
        let x = standardized_design(&mut rng, n, p);
        let u_star = sparse_signal(&mut rng, p, 3);
        let noise = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let z = &x * &u_star + noise * 0.7;
        let res = scaled_lasso(&z, &x, 0.3, &ScaledLassoOptions::default(), None).unwrap();
        if !res.converged {
            continue;
        }
        let refit = lasso_cd(&z, &x, &LassoConfig::new(res.omega_eff), None).unwrap();
        let gap = (&refit.coef - &res.u_hat).abs().max();
        assert!(gap <= 1e-8, "trial {trial}: equivalence gap {gap}");
        let report = kkt_check(&res.u_hat, &z, &x, res.omega_eff, 10.0 * DEFAULT_TOL);
        assert!(report.passes, "trial {trial}: {report:?}");
    }
}
