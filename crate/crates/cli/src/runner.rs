//! Seeded replication harness: generate (or load) data, fit each method,
//! score against the truth and a held-out test sample, and write one CSV row
//! per (seed, method) plus a summary JSON of means and standard errors.
//!
//! Replication i uses seed `base_seed + i`. Workers may run in parallel; the
//! output order is fixed by sorting on (seed, method), so results are
//! byte-identical regardless of scheduling. Timing fields are the only
//! nondeterministic output and are excluded from determinism checks.

use crate::baseline::lasso_baseline;
use crate::config::{ExperimentConfig, GeneratorSpec, Method};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use sess_core::factorcore::{fit_sess, SessFit, SessOptions};
use sess_core::matio::{
    destandardize_coef, format_value, load_matrix, standardize, Dataset, MatrixFormat,
};
use sess_core::metrics::{self, numerical_rank};
use sess_core::simgen::{self, Sim1Config, Sim2Config};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Ground truth available for scoring a replication.
#[derive(Debug, Clone)]
pub struct TruthData {
    pub c_star: DMatrix<f64>,
    pub u_star: Option<DMatrix<f64>>,
    pub r_star: usize,
}

/// One replication's data: raw (unstandardized) training pair, optional
/// truth, optional held-out test pair.
pub struct RepData {
    pub ds: Dataset,
    pub truth: Option<TruthData>,
    pub x_test: Option<DMatrix<f64>>,
    pub y_test: Option<DMatrix<f64>>,
}

/// One scored (seed, method) cell. `None` metrics have no defined value for
/// this method/generator combination and serialize as empty CSV cells.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub seed: u64,
    pub method: Method,
    pub pe: Option<f64>,
    pub ee: Option<f64>,
    pub re: Option<u64>,
    pub fnr: Option<f64>,
    pub fpr: Option<f64>,
    pub r_hat: usize,
    pub elapsed_seconds: f64,
}

pub struct RunOutputs {
    pub rows: Vec<RunRow>,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Builds the data for one replication seed.
pub fn generate_rep(cfg: &ExperimentConfig, seed: u64) -> Result<RepData, String> {
    match &cfg.generator {
        GeneratorSpec::Sim1 { cfg: sim } => {
            let sim = Sim1Config { seed, ..sim.clone() };
            let (ds, truth) = simgen::gen_sim1(&sim).map_err(|e| e.to_string())?;
            let (x_test, y_test) =
                simgen::gen_sim1_test(&sim, cfg.test_size).map_err(|e| e.to_string())?;
            Ok(RepData {
                ds,
                truth: Some(TruthData {
                    c_star: truth.c_star,
                    u_star: Some(truth.u_star),
                    r_star: truth.r_star,
                }),
                x_test: Some(x_test),
                y_test: Some(y_test),
            })
        }
        GeneratorSpec::Sim2 { cfg: sim } => {
            let sim = Sim2Config { seed, ..sim.clone() };
            let (ds, truth) = simgen::gen_sim2(&sim).map_err(|e| e.to_string())?;
            let (x_test, y_test) =
                simgen::gen_sim2_test(&sim, cfg.test_size).map_err(|e| e.to_string())?;
            Ok(RepData {
                ds,
                truth: Some(TruthData {
                    c_star: truth.c_star,
                    u_star: Some(truth.u_star),
                    r_star: truth.r_star,
                }),
                x_test: Some(x_test),
                y_test: Some(y_test),
            })
        }
        GeneratorSpec::Var {
            q,
            t_len,
            r,
            lag,
            noise_scale,
        } => {
            // simulate one path long enough for a forecasting tail
            let total = t_len + cfg.test_size;
            let (series, truth) =
                simgen::gen_var(*q, total, *r, *lag, *noise_scale, seed).map_err(|e| e.to_string())?;
            let train = series.view((0, 0), (*t_len, *q)).into_owned();
            let ds = sess_core::build_var_design(&train, *lag).map_err(|e| e.to_string())?;
            let tail = series
                .view((*t_len - *lag, 0), (cfg.test_size + *lag, *q))
                .into_owned();
            let test_ds = sess_core::build_var_design(&tail, *lag).map_err(|e| e.to_string())?;
            let r_star = numerical_rank(&truth.c_stacked, 1e-8);
            Ok(RepData {
                ds,
                truth: Some(TruthData {
                    c_star: truth.c_stacked,
                    u_star: None,
                    r_star,
                }),
                x_test: Some(test_ds.x),
                y_test: Some(test_ds.y),
            })
        }
        GeneratorSpec::Files {
            x,
            y,
            format,
            header,
            c_star,
            u_star,
            r_star,
            x_test,
            y_test,
        } => {
            let fmt: MatrixFormat = (*format).into();
            let xm = load_matrix(x, fmt, *header).map_err(|e| e.to_string())?;
            let ym = load_matrix(y, fmt, *header).map_err(|e| e.to_string())?;
            if xm.nrows() != ym.nrows() {
                return Err(format!(
                    "X has {} rows but Y has {} rows",
                    xm.nrows(),
                    ym.nrows()
                ));
            }
            let ds = Dataset::new(xm, ym).map_err(|e| e.to_string())?;
            let c = match c_star {
                Some(path) => Some(load_matrix(path, fmt, *header).map_err(|e| e.to_string())?),
                None => None,
            };
            let u = match u_star {
                Some(path) => Some(load_matrix(path, fmt, *header).map_err(|e| e.to_string())?),
                None => None,
            };
            let truth = c.map(|c_star_m| {
                let r = r_star.unwrap_or_else(|| numerical_rank(&c_star_m, 1e-8));
                TruthData {
                    c_star: c_star_m,
                    u_star: u,
                    r_star: r,
                }
            });
            let xt = match x_test {
                Some(path) => Some(load_matrix(path, fmt, *header).map_err(|e| e.to_string())?),
                None => None,
            };
            let yt = match y_test {
                Some(path) => Some(load_matrix(path, fmt, *header).map_err(|e| e.to_string())?),
                None => None,
            };
            Ok(RepData {
                ds,
                truth,
                x_test: xt,
                y_test: yt,
            })
        }
    }
}

/// Left-vector matrix of a fit on the original predictor scale, padded or
/// truncated to `r_star` columns (missing layers count as all-zero).
pub fn left_vector_matrix(fit: &SessFit, col_scales: &DVector<f64>, r_star: usize) -> DMatrix<f64> {
    let p = col_scales.len();
    let mut u = DMatrix::zeros(p, r_star);
    for (k, layer) in fit.layers.iter().take(r_star).enumerate() {
        for i in 0..p {
            u[(i, k)] = layer.u_hat[i] / col_scales[i];
        }
    }
    u
}

fn score_sess(
    rep: &RepData,
    std_ds: &Dataset,
    params: &crate::config::SessParams,
    seed: u64,
) -> Result<RunRow, String> {
    let opts = SessOptions {
        mu: params.mu,
        omega0: params.omega0,
        r_max: params.r_max,
        criterion_variant: params.criterion_variant.unwrap_or_default(),
        ..Default::default()
    };
    let start = Instant::now();
    let fit = fit_sess(std_ds, &opts).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let c = destandardize_coef(&fit.c_hat, &std_ds.col_scales).map_err(|e| e.to_string())?;
    let (pe, ee, re, fnr, fpr) = score_common(rep, &c, fit.r_hat, Some(&fit), std_ds)?;
    Ok(RunRow {
        seed,
        method: Method::Sess,
        pe,
        ee,
        re,
        fnr,
        fpr,
        r_hat: fit.r_hat,
        elapsed_seconds: elapsed,
    })
}

fn score_baseline(rep: &RepData, std_ds: &Dataset, seed: u64) -> Result<RunRow, String> {
    let start = Instant::now();
    let c_std = lasso_baseline(&std_ds.x, &std_ds.y).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let c = destandardize_coef(&c_std, &std_ds.col_scales).map_err(|e| e.to_string())?;
    let r_hat = numerical_rank(&c, 1e-8);
    let (pe, ee, re, _, _) = score_common(rep, &c, r_hat, None, std_ds)?;
    Ok(RunRow {
        seed,
        method: Method::LassoBaseline,
        pe,
        ee,
        re,
        fnr: None,
        fpr: None,
        r_hat,
        elapsed_seconds: elapsed,
    })
}

#[allow(clippy::type_complexity)]
fn score_common(
    rep: &RepData,
    c: &DMatrix<f64>,
    r_hat: usize,
    fit: Option<&SessFit>,
    std_ds: &Dataset,
) -> Result<(Option<f64>, Option<f64>, Option<u64>, Option<f64>, Option<f64>), String> {
    let pe = match (&rep.x_test, &rep.y_test) {
        (Some(xt), Some(yt)) => Some(metrics::pe(yt, xt, c).map_err(|e| e.to_string())?),
        _ => None,
    };
    let (ee, re, fnr, fpr) = match &rep.truth {
        Some(truth) => {
            let ee = metrics::ee(c, &truth.c_star).map_err(|e| e.to_string())?;
            let re = metrics::re(r_hat, truth.r_star) as u64;
            let (fnr, fpr) = match (fit, &truth.u_star) {
                (Some(f), Some(u_star)) => {
                    let u_hat = left_vector_matrix(f, &std_ds.col_scales, truth.r_star);
                    let (a, b) = metrics::selection_rates(&u_hat, u_star).map_err(|e| e.to_string())?;
                    (Some(a), Some(b))
                }
                _ => (None, None),
            };
            (Some(ee), Some(re), fnr, fpr)
        }
        None => (None, None, None, None),
    };
    Ok((pe, ee, re, fnr, fpr))
}

/// Runs one replication: standardize once, then fit and score every method.
pub fn run_replication(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<RunRow>, String> {
    let rep = generate_rep(cfg, seed)?;
    let std_ds = standardize(&rep.ds).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for method in &cfg.methods {
        let row = match method {
            Method::Sess => score_sess(&rep, &std_ds, &cfg.sess, seed)?,
            Method::LassoBaseline => score_baseline(&rep, &std_ds, seed)?,
        };
        rows.push(row);
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "seed,method,pe,ee,re,fnr,fpr,r_hat,elapsed_seconds";

fn opt_cell(v: Option<f64>) -> String {
    v.map(format_value).unwrap_or_default()
}

pub fn row_to_csv(row: &RunRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{:.6}",
        row.seed,
        row.method,
        opt_cell(row.pe),
        opt_cell(row.ee),
        row.re.map(|v| v.to_string()).unwrap_or_default(),
        opt_cell(row.fnr),
        opt_cell(row.fpr),
        row.r_hat,
        row.elapsed_seconds
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
    pub count: usize,
}

/// Mean and standard error (sample sd / sqrt(count)) over defined values.
pub fn stat_of(values: &[f64]) -> Option<Stat> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let se = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Some(Stat {
        mean,
        se,
        count: values.len(),
    })
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub replications: usize,
    pub test_size: usize,
    pub fnr_fpr_units: String,
    pub methods: BTreeMap<String, BTreeMap<String, Stat>>,
    /// Wall-clock statistics, kept apart from the deterministic metrics.
    pub timing: BTreeMap<String, Stat>,
}

pub fn summarize(cfg: &ExperimentConfig, rows: &[RunRow]) -> Summary {
    let mut methods = BTreeMap::new();
    let mut timing = BTreeMap::new();
    for method in &cfg.methods {
        let name = method.to_string();
        let of: Vec<&RunRow> = rows.iter().filter(|r| r.method == *method).collect();
        let mut stats = BTreeMap::new();
        let grab = |f: &dyn Fn(&RunRow) -> Option<f64>| -> Vec<f64> {
            of.iter().filter_map(|r| f(r)).collect()
        };
        if let Some(s) = stat_of(&grab(&|r| r.pe)) {
            stats.insert("pe".to_string(), s);
        }
        if let Some(s) = stat_of(&grab(&|r| r.ee)) {
            stats.insert("ee".to_string(), s);
        }
        if let Some(s) = stat_of(&grab(&|r| r.re.map(|v| v as f64))) {
            stats.insert("re".to_string(), s);
        }
        if let Some(s) = stat_of(&grab(&|r| r.fnr)) {
            stats.insert("fnr".to_string(), s);
        }
        if let Some(s) = stat_of(&grab(&|r| r.fpr)) {
            stats.insert("fpr".to_string(), s);
        }
        if let Some(s) = stat_of(&grab(&|r| Some(r.r_hat as f64))) {
            stats.insert("r_hat".to_string(), s);
        }
        if let Some(s) = stat_of(&grab(&|r| Some(r.elapsed_seconds))) {
            timing.insert(name.clone(), s);
        }
        methods.insert(name, stats);
    }
    Summary {
        replications: cfg.replications,
        test_size: cfg.test_size,
        fnr_fpr_units: "percent".to_string(),
        methods,
        timing,
    }
}

#[derive(Debug, Serialize)]
struct Manifest {
    completed_seeds: Vec<u64>,
    failures: Vec<ManifestFailure>,
}

#[derive(Debug, Serialize)]
struct ManifestFailure {
    seed: u64,
    error: String,
}

/// Runs the whole experiment and writes `per_replication.csv` and
/// `summary.json` under the configured output directory. On partial failure
/// the completed rows are preserved alongside a `manifest.json`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutputs, RunError> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let seeds: Vec<u64> = (0..cfg.replications)
        .map(|i| cfg.base_seed + i as u64)
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| RunError::Runtime(e.to_string()))?;
    let results: Vec<(u64, Result<Vec<RunRow>, String>)> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| (seed, run_replication(cfg, seed)))
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (seed, res) in results {
        match res {
            Ok(mut r) => rows.append(&mut r),
            Err(error) => failures.push(ManifestFailure { seed, error }),
        }
    }
    rows.sort_by_key(|r| (r.seed, r.method.to_string()));

    let csv_path = cfg.output_dir.join("per_replication.csv");
    let mut csv = std::fs::File::create(&csv_path)?;
    writeln!(csv, "{CSV_HEADER}")?;
    for row in &rows {
        writeln!(csv, "{}", row_to_csv(row))?;
    }

    let summary_path = cfg.output_dir.join("summary.json");
    let summary = summarize(cfg, &rows);
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary).unwrap())?;

    if !failures.is_empty() {
        let manifest = Manifest {
            completed_seeds: {
                let mut s: Vec<u64> = rows.iter().map(|r| r.seed).collect();
                s.dedup();
                s
            },
            failures,
        };
        std::fs::write(
            cfg.output_dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest).unwrap(),
        )?;
        let first = manifest_first_error(&cfg.output_dir);
        return Err(RunError::Runtime(format!(
            "{} replication(s) failed; partial results preserved in {} ({first})",
            manifest_failure_count(&cfg.output_dir),
            cfg.output_dir.display()
        )));
    }
    Ok(RunOutputs {
        rows,
        csv_path,
        summary_path,
    })
}

fn manifest_failure_count(dir: &std::path::Path) -> usize {
    std::fs::read_to_string(dir.join("manifest.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| v["failures"].as_array().map(|a| a.len()))
        .unwrap_or(0)
}

fn manifest_first_error(dir: &std::path::Path) -> String {
    std::fs::read_to_string(dir.join("manifest.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| {
            v["failures"][0]["error"]
                .as_str()
                .map(|s| s.to_string())
        })
        .unwrap_or_else(|| "unknown error".to_string())
}
