//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Benchmark-replication settings are pinned here: design-1 runs 20
//! replications at (n, q, r, p) = (100, 200, 3, 800), gamma = 0.1, test size
//! 2000, omega0 = 0.35; design-2 runs 10 replications at (n, p, q) =
//! (200, 250, 100), d* = (60, 30, 10), s = (8, 9, 9), SNR = 0.75, t(5)
//! errors, omega0 = 0.15.
//!
//! Design-1 note: the construction's singular values (100, 99, 98) are 1-2 %
//! apart while the realized X-weighting fluctuates O(n^{-1/2}), so individual
//! layers are only identified up to a rotation within the top-3 subspace.
//! Per-layer support comparison is therefore ill-posed for this design and
//! the selection rates below compare row supports (the union over layers),
//! which is rotation-invariant; design-2's well-separated layers are compared
//! per position directly.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use sess_cli::baseline::lasso_baseline;
use sess_core::factorcore::{fit_sess, select_rank, top_eigenpairs, CriterionVariant, SessOptions};
use sess_core::matio::{destandardize_coef, standardize};
use sess_core::metrics::{self, numerical_rank};
use sess_core::oracles::{lasso_min_objective_enumerated, lasso_objective};
use sess_core::simgen::{
    ar1_correlation, ar1_rows, gen_sim1, gen_sim1_test, gen_sim2, gen_sim2_test, stream_rng,
    Sim1Config, Sim2Config,
};
use sess_core::solvers::{kkt_check, lasso_cd, scaled_lasso, LassoConfig, ScaledLassoOptions};
use std::time::Instant;

const SIM1_OMEGA0: f64 = 0.35;
const SIM2_OMEGA0: f64 = 0.15;
const SIM1_BASE_SEED: u64 = 0;
const SIM2_BASE_SEED: u64 = 0;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed: {detail}");
}

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

/// Row-support matrices (p x 1) for rotation-invariant selection scoring.
fn row_support(u: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(u.nrows(), 1, |i, _| {
        u.row(i).iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    })
}

#[test]
fn criterion_1_noiseless_exactness() {
    let start = Instant::now();
    let mut cfg = Sim1Config::new(100, 200, 150, 3, 7);
    cfg.gamma = 0.0;
    let (ds, truth) = gen_sim1(&cfg).unwrap();
    let n = ds.n() as f64;
    let sqrt_n = n.sqrt();

    // the latent-factor parametrization implied by the realized design:
    // thin SVD of X C* / sqrt(n) gives the factors and scaled right vectors
    let m = &ds.x * &truth.c_star / sqrt_n;
    let svd = m.clone().svd(true, true);
    let w = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let d = svd.singular_values;
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap());

    let std_ds = standardize(&ds).unwrap();
    let fit = fit_sess(&std_ds, &SessOptions::default()).unwrap();

    let mut ok = fit.r_hat == 3;
    let mut detail = format!("r_hat = {}", fit.r_hat);
    let mut worst_z = 0.0f64;
    let mut worst_v = 0.0f64;
    for (k, layer) in fit.layers.iter().enumerate() {
        let idx = order[k];
        let z_star = DVector::from_column_slice(w.column(idx).as_slice()) * sqrt_n;
        let v_star = vt.row(idx).transpose() * d[idx];
        let sign = if layer.z_hat.dot(&z_star) >= 0.0 { 1.0 } else { -1.0 };
        worst_z = worst_z.max((&layer.z_hat - &z_star * sign).norm());
        worst_v = worst_v.max((&layer.v_hat - &v_star * sign).norm());
    }
    ok &= worst_z <= 1e-8 * sqrt_n;
    ok &= worst_v <= 1e-8;
    let c = destandardize_coef(&fit.c_hat, &std_ds.col_scales).unwrap();
    let ee = metrics::ee(&c, &truth.c_star).unwrap();
    ok &= ee <= 1e-3;
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 5.0;
    detail.push_str(&format!(
        ", max ||z - Xu*|| = {worst_z:.3e} (tol {:.3e}), max ||v - v*|| = {worst_v:.3e}, ee = {ee:.3e}, {elapsed:.2}s"
    , 1e-8 * sqrt_n));
    report("criterion 1 (noiseless exactness)", ok, &detail);
}

#[test]
fn criterion_2_telescoping_identity() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for trial in 0..50u64 {
        let mut rng = stream_rng(9000 + trial, 1);
        let n = 10 + (trial as usize * 7) % 91;
        let q = 10 + (trial as usize * 13) % 91;
        let y = DMatrix::from_fn(n, q, |_, _| StandardNormal.sample(&mut rng));
        let pairs = top_eigenpairs(&y, n.min(q)).unwrap();
        let lam1 = pairs.first().map(|p| p.1).unwrap_or(0.0);
        let (_, trace) = select_rank(&y, &pairs, CriterionVariant::NScale).unwrap();
        for k in 1..trace.len() {
            let drop = trace[k - 1].loss - trace[k].loss;
            let err = (drop - pairs[k - 1].1).abs() / (lam1 + 1.0);
            worst = worst.max(err);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst <= 1e-10 && elapsed < 10.0;
    report(
        "criterion 2 (telescoping identity)",
        ok,
        &format!("max |Delta L - lambda| / (lambda_1 + 1) = {worst:.3e}, {elapsed:.2}s"),
    );
}

#[test]
fn criterion_3_scaled_lasso_equivalence_kkt_and_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(303);
    let mut converged = 0usize;
    let mut max_equiv_gap = 0.0f64;
    let mut kkt_failures = 0usize;
    for trial in 0..100 {
        let n = 30 + (trial % 6) * 10; // up to 80
        let p = 40 + (trial % 5) * 40; // up to 200
        let x = standardized_design(&mut rng, n, p);
        let mut u_star = DVector::zeros(p);
        let nnz = 1 + trial % 4;
        for k in 0..nnz {
            let v: f64 = StandardNormal.sample(&mut rng);
            u_star[(k * 17 + 3) % p] = v + v.signum() * 0.4;
        }
        let noise = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let scale = 0.2 + 0.2 * (trial % 3) as f64;
        let z = &x * &u_star + noise * scale;
        let omega0 = [0.25, 0.3, 0.4][trial % 3];
        let res = scaled_lasso(&z, &x, omega0, &ScaledLassoOptions::default(), None).unwrap();
        if !res.converged {
            continue;
        }
        converged += 1;
        let refit = lasso_cd(&z, &x, &LassoConfig::new(res.omega_eff), None).unwrap();
        max_equiv_gap = max_equiv_gap.max((&refit.coef - &res.u_hat).abs().max());
        let rep = kkt_check(&res.u_hat, &z, &x, res.omega_eff, 1e-7);
        if !rep.passes {
            kkt_failures += 1;
        }
    }
    // independent convex oracle on small instances
    let mut max_oracle_gap = 0.0f64;
    for trial in 0..20 {
        let n = 20 + (trial % 3) * 5; // up to 30
        let p = 6 + trial % 5; // up to 10
        let x = standardized_design(&mut rng, n, p);
        let mut u_star = DVector::zeros(p);
        u_star[trial % p] = 1.0;
        u_star[(trial + 2) % p] = -0.7;
        let noise = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let z = &x * &u_star + noise * 0.5;
        let omega = 0.1;
        let fit = lasso_cd(&z, &x, &LassoConfig::new(omega), None).unwrap();
        let got = lasso_objective(&z, &x, &fit.coef, omega);
        let want = lasso_min_objective_enumerated(&z, &x, omega);
        max_oracle_gap = max_oracle_gap.max((got - want).abs() / (1.0 + want.abs()));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = converged >= 90
        && max_equiv_gap <= 1e-8
        && kkt_failures == 0
        && max_oracle_gap <= 1e-6
        && elapsed < 60.0;
    report(
        "criterion 3 (scaled-lasso equivalence, KKT, convex oracle)",
        ok,
        &format!(
            "{converged}/100 converged, max equivalence gap = {max_equiv_gap:.3e}, \
             kkt failures = {kkt_failures}, max oracle gap = {max_oracle_gap:.3e}, {elapsed:.2}s"
        ),
    );
}

struct Sim1Rep {
    sess_ee: f64,
    sess_pe: f64,
    sess_re: usize,
    row_fnr: f64,
    row_fpr: f64,
    lasso_ee: f64,
    lasso_re: usize,
}

fn run_sim1_rep(seed: u64) -> Sim1Rep {
    let cfg = Sim1Config::new(100, 800, 200, 3, seed);
    let (ds, truth) = gen_sim1(&cfg).unwrap();
    let std_ds = standardize(&ds).unwrap();
    let opts = SessOptions {
        omega0: Some(SIM1_OMEGA0),
        ..Default::default()
    };
    let fit = fit_sess(&std_ds, &opts).unwrap();
    let c_sess = destandardize_coef(&fit.c_hat, &std_ds.col_scales).unwrap();
    let (x_test, y_test) = gen_sim1_test(&cfg, 2000).unwrap();
    let sess_pe = metrics::pe(&y_test, &x_test, &c_sess).unwrap();
    let sess_ee = metrics::ee(&c_sess, &truth.c_star).unwrap();
    let sess_re = metrics::re(fit.r_hat, truth.r_star);
    // rotation-invariant row supports (see module docs)
    let u_hat = sess_cli::runner::left_vector_matrix(&fit, &std_ds.col_scales, truth.r_star);
    let (row_fnr, row_fpr) =
        metrics::selection_rates(&row_support(&u_hat), &row_support(&truth.u_star)).unwrap();
    // column-wise Lasso baseline on the same replication
    let c_lasso_std = lasso_baseline(&std_ds.x, &std_ds.y).unwrap();
    let c_lasso = destandardize_coef(&c_lasso_std, &std_ds.col_scales).unwrap();
    let lasso_ee = metrics::ee(&c_lasso, &truth.c_star).unwrap();
    let lasso_re = metrics::re(numerical_rank(&c_lasso, 1e-8), truth.r_star);
    Sim1Rep {
        sess_ee,
        sess_pe,
        sess_re,
        row_fnr,
        row_fpr,
        lasso_ee,
        lasso_re,
    }
}

#[test]
fn criteria_4_and_5_table1_desk_scale_and_baseline_contrast() {
    let start = Instant::now();
    let reps: Vec<Sim1Rep> = (0..20).map(|i| run_sim1_rep(SIM1_BASE_SEED + i)).collect();
    let mean = |f: &dyn Fn(&Sim1Rep) -> f64| -> f64 {
        reps.iter().map(|r| f(r)).sum::<f64>() / reps.len() as f64
    };
    let mean_re = mean(&|r| r.sess_re as f64);
    let mean_fnr = mean(&|r| r.row_fnr);
    let mean_fpr = mean(&|r| r.row_fpr);
    let mean_pe = mean(&|r| r.sess_pe);
    let mean_ee = mean(&|r| r.sess_ee);
    let elapsed = start.elapsed().as_secs_f64();
    let ok4 = mean_re == 0.0
        && mean_fnr == 0.0
        && mean_fpr <= 0.5
        && (0.020..=0.035).contains(&mean_pe)
        && mean_ee <= 0.020
        && elapsed < 600.0;
    report(
        "criterion 4 (design-1 desk-scale replication)",
        ok4,
        &format!(
            "mean RE = {mean_re}, mean FNR = {mean_fnr:.4}, mean FPR = {mean_fpr:.4}, \
             mean PE = {mean_pe:.4}, mean EE = {mean_ee:.4}, {elapsed:.1}s / 20 reps"
        ),
    );

    let mean_lasso_ee = mean(&|r| r.lasso_ee);
    let mean_lasso_re = mean(&|r| r.lasso_re as f64);
    let ok5 = mean_lasso_ee >= 2.0 * mean_ee && mean_lasso_re >= 50.0;
    report(
        "criterion 5 (column-wise Lasso contrast)",
        ok5,
        &format!(
            "lasso EE = {mean_lasso_ee:.4} vs 2 x sess EE = {:.4}, lasso RE = {mean_lasso_re:.1}",
            2.0 * mean_ee
        ),
    );
}

#[test]
fn criterion_6_sim2_reduced_scale() {
    let start = Instant::now();
    let mut res = Vec::new();
    for i in 0..10u64 {
        let cfg = Sim2Config {
            n: 200,
            p: 250,
            q: 100,
            d_star: [60.0, 30.0, 10.0],
            s: [8, 9, 9],
            snr: 0.75,
            df: 5.0,
            seed: SIM2_BASE_SEED + i,
            ..Sim2Config::default()
        };
        let (ds, truth) = gen_sim2(&cfg).unwrap();
        let std_ds = standardize(&ds).unwrap();
        let opts = SessOptions {
            omega0: Some(SIM2_OMEGA0),
            ..Default::default()
        };
        let fit = fit_sess(&std_ds, &opts).unwrap();
        let c = destandardize_coef(&fit.c_hat, &std_ds.col_scales).unwrap();
        let ee = metrics::ee(&c, &truth.c_star).unwrap();
        let re = metrics::re(fit.r_hat, truth.r_star);
        let (x_test, y_test) = gen_sim2_test(&cfg, 1000).unwrap();
        let pe = metrics::pe(&y_test, &x_test, &c).unwrap();
        // per-position selection rates are well-posed here (d* well separated)
        let u_hat = sess_cli::runner::left_vector_matrix(&fit, &std_ds.col_scales, truth.r_star);
        let (fnr, fpr) = metrics::selection_rates(&u_hat, &truth.u_star).unwrap();
        res.push((re as f64, ee, pe, fnr, fpr));
    }
    let mean_re = res.iter().map(|r| r.0).sum::<f64>() / res.len() as f64;
    let mean_ee = res.iter().map(|r| r.1).sum::<f64>() / res.len() as f64;
    let mean_pe = res.iter().map(|r| r.2).sum::<f64>() / res.len() as f64;
    let mean_fnr = res.iter().map(|r| r.3).sum::<f64>() / res.len() as f64;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = mean_re == 0.0 && mean_ee <= 0.06 && elapsed < 600.0;
    report(
        "criterion 6 (design-2 reduced scale)",
        ok,
        &format!(
            "mean RE = {mean_re}, mean EE = {mean_ee:.4}, mean PE = {mean_pe:.4}, \
             mean FNR = {mean_fnr:.3}, {elapsed:.1}s / 10 reps"
        ),
    );
}

#[test]
fn criterion_7_random_matrix_bound() {
    let start = Instant::now();
    let (n, q, rho) = (100usize, 100usize, 0.5);
    let sigma = ar1_correlation(q, rho);
    let eig = nalgebra::SymmetricEigen::new(sigma);
    let gamma_u = eig.eigenvalues.max().sqrt();
    let bound = gamma_u * (2.0 * (n as f64).sqrt() + (q as f64).sqrt());
    let mut worst_ratio = 0.0f64;
    let mut violations = 0usize;
    for trial in 0..200u64 {
        let mut rng = stream_rng(7000 + trial, 3);
        let e = ar1_rows(&mut rng, n, q, rho);
        let top: f64 = e.svd(false, false).singular_values.max();
        worst_ratio = worst_ratio.max(top / bound);
        if top > bound {
            violations += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = violations == 0 && elapsed < 30.0;
    report(
        "criterion 7 (spectral-norm tail bound)",
        ok,
        &format!(
            "0 violations target: got {violations}/200, worst ||E||_2 / bound = {worst_ratio:.4}, \
             gamma_u = {gamma_u:.4}, {elapsed:.1}s"
        ),
    );
}

#[test]
fn criterion_8_determinism() {
    let start = Instant::now();
    // generators byte-identical under one seed
    let cfg1 = Sim1Config::new(30, 40, 20, 2, 99);
    let (a, _) = gen_sim1(&cfg1).unwrap();
    let (b, _) = gen_sim1(&cfg1).unwrap();
    let gen_ok = sess_core::matio::format_matrix(&a.x, sess_core::matio::MatrixFormat::Csv, None)
        == sess_core::matio::format_matrix(&b.x, sess_core::matio::MatrixFormat::Csv, None)
        && sess_core::matio::format_matrix(&a.y, sess_core::matio::MatrixFormat::Csv, None)
            == sess_core::matio::format_matrix(&b.y, sess_core::matio::MatrixFormat::Csv, None);

    // cmd_run byte-identical with timing columns stripped
    let bin = env!("CARGO_BIN_EXE_sess");
    let tmp = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "generator": {"kind": "sim1", "n": 40, "p": 60, "q": 30, "r": 2},
        "methods": ["sess", "lasso_baseline"],
        "replications": 3,
        "base_seed": 11,
        "test_size": 200,
        "output_dir": tmp.path().join("a"),
    });
    let cfg_path = tmp.path().join("exp.json");
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let mut outputs = Vec::new();
    for sub in ["a", "b"] {
        let out = tmp.path().join(sub);
        let status = std::process::Command::new(bin)
            .arg("run")
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "run failed: {}",
            String::from_utf8_lossy(&status.stderr)
        );
        let csv = std::fs::read_to_string(out.join("per_replication.csv")).unwrap();
        let stripped: String = csv
            .lines()
            .map(|l| {
                let cols: Vec<&str> = l.split(',').collect();
                cols[..cols.len() - 1].join(",")
            })
            .collect::<Vec<_>>()
            .join("\n");
        let summary = std::fs::read_to_string(out.join("summary.json")).unwrap();
        let mut summary_json: serde_json::Value = serde_json::from_str(&summary).unwrap();
        summary_json.as_object_mut().unwrap().remove("timing");
        outputs.push((stripped, summary_json.to_string()));
    }
    let run_ok = outputs[0] == outputs[1];
    let elapsed = start.elapsed().as_secs_f64();
    let ok = gen_ok && run_ok;
    report(
        "criterion 8 (byte determinism)",
        ok,
        &format!("generators identical: {gen_ok}, cmd_run identical: {run_ok}, {elapsed:.1}s"),
    );
}
