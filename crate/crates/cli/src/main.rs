//! `sess` command-line front end.
//!
//! Commands: `run <config.json>` (replicated experiments), `fit`, `predict`,
//! `gen`, `score`. Exit codes: 0 ok, 1 config/validation error, 2 runtime
//! failure (partial results are preserved with a manifest).

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use sess_cli::config::{ExperimentConfig, GeneratorSpec};
use sess_cli::runner::{self, RunError};
use sess_core::factorcore::{fit_sess, CriterionVariant, FitDocument, SessOptions};
use sess_core::matio::{
    format_value, load_matrix, save_matrix, standardize, Dataset, MatrixFormat,
};
use sess_core::metrics::{self, ScoreReport};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "sess",
    about = "Sequential scaled sparse factor regression: fit, predict, and replicate benchmark experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionFlag {
    N,
    Q,
}

impl From<CriterionFlag> for CriterionVariant {
    fn from(c: CriterionFlag) -> Self {
        match c {
            CriterionFlag::N => CriterionVariant::NScale,
            CriterionFlag::Q => CriterionVariant::QScale,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatFlag {
    Csv,
    Tsv,
}

impl From<FormatFlag> for MatrixFormat {
    fn from(f: FormatFlag) -> Self {
        match f {
            FormatFlag::Csv => MatrixFormat::Csv,
            FormatFlag::Tsv => MatrixFormat::Tsv,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a replicated experiment from a JSON config.
    Run {
        config: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        omega0: Option<f64>,
        #[arg(long)]
        rmax: Option<usize>,
        #[arg(long, value_enum)]
        criterion: Option<CriterionFlag>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        test_size: Option<usize>,
    },
    /// Fit on X/Y matrix files and write the fit JSON.
    Fit {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatFlag,
        /// Input files carry a single header row.
        #[arg(long)]
        header: bool,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        omega0: Option<f64>,
        #[arg(long)]
        rmax: Option<usize>,
        #[arg(long, value_enum)]
        criterion: Option<CriterionFlag>,
    },
    /// Apply a stored fit to new predictors and write predictions as CSV.
    Predict {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatFlag,
        #[arg(long)]
        header: bool,
    },
    /// Generate one dataset from a config's generator block and write it out.
    Gen {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a stored fit against X/Y (optionally with ground-truth files).
    Score {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        c_star: Option<PathBuf>,
        #[arg(long)]
        u_star: Option<PathBuf>,
        #[arg(long)]
        r_star: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatFlag,
        #[arg(long)]
        header: bool,
    },
}

/// Exit-code classification: validation problems exit 1, mid-run failures 2.
enum AppError {
    Validation(String),
    Runtime(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Validation(_) => 1,
            AppError::Runtime(_) => 2,
        }
    }
    fn message(&self) -> &str {
        match self {
            AppError::Validation(m) | AppError::Runtime(m) => m,
        }
    }
}

fn validation<E: std::fmt::Display>(e: E) -> AppError {
    AppError::Validation(e.to_string())
}

fn runtime<E: std::fmt::Display>(e: E) -> AppError {
    AppError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), AppError> {
    match cmd {
        Cmd::Run {
            config,
            seed,
            out,
            mu,
            omega0,
            rmax,
            criterion,
            threads,
            test_size,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config).map_err(validation)?;
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(v) = mu {
                cfg.sess.mu = Some(v);
            }
            if let Some(v) = omega0 {
                cfg.sess.omega0 = Some(v);
            }
            if let Some(v) = rmax {
                cfg.sess.r_max = Some(v);
            }
            if let Some(c) = criterion {
                cfg.sess.criterion_variant = Some(c.into());
            }
            if let Some(t) = threads {
                cfg.threads = t;
            }
            if let Some(t) = test_size {
                cfg.test_size = t;
            }
            match runner::run_experiment(&cfg) {
                Ok(outputs) => {
                    println!(
                        "wrote {} rows to {}",
                        outputs.rows.len(),
                        outputs.csv_path.display()
                    );
                    Ok(())
                }
                Err(RunError::Config(e)) => Err(validation(e)),
                Err(e) => Err(runtime(e)),
            }
        }
        Cmd::Fit {
            x,
            y,
            out,
            format,
            header,
            mu,
            omega0,
            rmax,
            criterion,
        } => cmd_fit(
            &x,
            &y,
            &out,
            format.into(),
            header,
            SessOptions {
                mu,
                omega0,
                r_max: rmax,
                criterion_variant: criterion.map(Into::into).unwrap_or_default(),
                ..Default::default()
            },
        ),
        Cmd::Predict {
            fit,
            x,
            out,
            format,
            header,
        } => cmd_predict(&fit, &x, &out, format.into(), header),
        Cmd::Gen { config, out, seed } => cmd_gen(&config, out, seed),
        Cmd::Score {
            fit,
            x,
            y,
            out,
            c_star,
            u_star,
            r_star,
            format,
            header,
        } => cmd_score(ScoreArgs {
            fit_path: &fit,
            x_path: &x,
            y_path: &y,
            out: &out,
            c_star: c_star.as_deref(),
            u_star: u_star.as_deref(),
            r_star,
            format: format.into(),
            header,
        }),
    }
}

fn load_fit_document(path: &Path) -> Result<FitDocument, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Validation(format!("cannot read fit {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| AppError::Validation(format!("fit JSON schema error: {e}")))
}

fn cmd_fit(
    x_path: &Path,
    y_path: &Path,
    out: &Path,
    format: MatrixFormat,
    header: bool,
    opts: SessOptions,
) -> Result<(), AppError> {
    let x = load_matrix(x_path, format, header).map_err(validation)?;
    let y = load_matrix(y_path, format, header).map_err(validation)?;
    let ds = Dataset::new(x, y).map_err(validation)?;
    let std_ds = standardize(&ds).map_err(validation)?;
    let fit = fit_sess(&std_ds, &opts).map_err(runtime)?;
    let doc = FitDocument::from_fit(
        &fit,
        std_ds.p(),
        std_ds.q(),
        Some(std_ds.col_scales.iter().copied().collect()),
    );
    std::fs::write(out, serde_json::to_string_pretty(&doc).unwrap()).map_err(runtime)?;
    println!(
        "fit: r_hat = {}, omega0 = {:.6}, mu = {:.6e} -> {}",
        doc.r_hat,
        doc.omega0,
        doc.mu,
        out.display()
    );
    Ok(())
}

fn standardize_with_scales(x: &DMatrix<f64>, scales: &[f64]) -> Result<DMatrix<f64>, AppError> {
    if x.ncols() != scales.len() {
        return Err(AppError::Validation(format!(
            "dimension error: X has {} columns but the fit expects p = {}",
            x.ncols(),
            scales.len()
        )));
    }
    let mut out = x.clone();
    for (j, &s) in scales.iter().enumerate() {
        if s.is_nan() || s <= 0.0 {
            return Err(AppError::Validation(format!(
                "fit stores a non-positive column scale at index {j}"
            )));
        }
        let mut col = out.column_mut(j);
        col /= s;
    }
    Ok(out)
}

fn cmd_predict(
    fit_path: &Path,
    x_path: &Path,
    out: &Path,
    format: MatrixFormat,
    header: bool,
) -> Result<(), AppError> {
    let doc = load_fit_document(fit_path)?;
    let scales = doc.col_scales.clone().ok_or_else(|| {
        AppError::Validation("fit document carries no col_scales; cannot map new data".into())
    })?;
    let x = load_matrix(x_path, format, header).map_err(validation)?;
    let x_std = standardize_with_scales(&x, &scales)?;
    let c_hat = doc.assemble_c_hat().map_err(validation)?;
    let pred = x_std * c_hat;
    save_matrix(&pred, out, MatrixFormat::Csv, None).map_err(runtime)?;
    println!(
        "predictions {}x{} -> {}",
        pred.nrows(),
        pred.ncols(),
        out.display()
    );
    Ok(())
}

fn cmd_gen(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), AppError> {
    let mut cfg = ExperimentConfig::from_path(config).map_err(validation)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&dir).map_err(runtime)?;
    let rep = runner::generate_rep(&cfg, cfg.base_seed).map_err(AppError::Runtime)?;
    save_matrix(&rep.ds.x, dir.join("x.csv"), MatrixFormat::Csv, None).map_err(runtime)?;
    save_matrix(&rep.ds.y, dir.join("y.csv"), MatrixFormat::Csv, None).map_err(runtime)?;
    if let Some(truth) = &rep.truth {
        save_matrix(&truth.c_star, dir.join("c_star.csv"), MatrixFormat::Csv, None)
            .map_err(runtime)?;
        if let Some(u) = &truth.u_star {
            save_matrix(u, dir.join("u_star.csv"), MatrixFormat::Csv, None).map_err(runtime)?;
        }
        let meta = serde_json::json!({
            "r_star": truth.r_star,
            "seed": cfg.base_seed,
            "generator": generator_name(&cfg.generator),
        });
        std::fs::write(
            dir.join("truth.json"),
            serde_json::to_string_pretty(&meta).unwrap(),
        )
        .map_err(runtime)?;
    }
    if let (Some(xt), Some(yt)) = (&rep.x_test, &rep.y_test) {
        save_matrix(xt, dir.join("x_test.csv"), MatrixFormat::Csv, None).map_err(runtime)?;
        save_matrix(yt, dir.join("y_test.csv"), MatrixFormat::Csv, None).map_err(runtime)?;
    }
    println!("dataset written to {}", dir.display());
    Ok(())
}

fn generator_name(g: &GeneratorSpec) -> &'static str {
    match g {
        GeneratorSpec::Sim1 { .. } => "sim1",
        GeneratorSpec::Sim2 { .. } => "sim2",
        GeneratorSpec::Var { .. } => "var",
        GeneratorSpec::Files { .. } => "files",
    }
}

struct ScoreArgs<'a> {
    fit_path: &'a Path,
    x_path: &'a Path,
    y_path: &'a Path,
    out: &'a Path,
    c_star: Option<&'a Path>,
    u_star: Option<&'a Path>,
    r_star: Option<usize>,
    format: MatrixFormat,
    header: bool,
}

fn cmd_score(args: ScoreArgs<'_>) -> Result<(), AppError> {
    let start = Instant::now();
    let doc = load_fit_document(args.fit_path)?;
    let scales = doc.col_scales.clone().ok_or_else(|| {
        AppError::Validation("fit document carries no col_scales; cannot score new data".into())
    })?;
    let x = load_matrix(args.x_path, args.format, args.header).map_err(validation)?;
    let y = load_matrix(args.y_path, args.format, args.header).map_err(validation)?;
    if y.nrows() != x.nrows() {
        return Err(AppError::Validation(format!(
            "X has {} rows but Y has {} rows",
            x.nrows(),
            y.nrows()
        )));
    }
    let x_std = standardize_with_scales(&x, &scales)?;
    let c_std = doc.assemble_c_hat().map_err(validation)?;
    let pe = metrics::pe(&y, &x_std, &c_std).map_err(validation)?;
    let forecast_error = metrics::forecast_error(&y, &x_std, &c_std).map_err(validation)?;
    // cumulative per-factor R^2 on the provided sample
    let mut r2_per_factor = Vec::new();
    let mut yhat = DMatrix::zeros(y.nrows(), y.ncols());
    for layer in &doc.layers {
        let mut u = DVector::zeros(doc.p);
        for e in &layer.u_hat {
            u[e.index] = e.value;
        }
        let v = DVector::from_vec(layer.v_hat.clone());
        yhat += (&x_std * u) * v.transpose();
        let (vals, _excluded) = metrics::r2_per_column(&y, &yhat).map_err(validation)?;
        let mean = if vals.is_empty() {
            f64::NAN
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        r2_per_factor.push(mean);
    }
    let scales_vec = DVector::from_vec(scales);
    let c_orig = sess_core::destandardize_coef(&c_std, &scales_vec).map_err(validation)?;
    let (ee, re, fnr, fpr) = match args.c_star {
        Some(path) => {
            let c_true = load_matrix(path, args.format, args.header).map_err(validation)?;
            let ee = metrics::ee(&c_orig, &c_true).map_err(validation)?;
            let r_true = args
                .r_star
                .unwrap_or_else(|| metrics::numerical_rank(&c_true, 1e-8));
            let re = metrics::re(doc.r_hat, r_true);
            let (fnr, fpr) = match args.u_star {
                Some(upath) => {
                    let u_true = load_matrix(upath, args.format, args.header).map_err(validation)?;
                    let mut u_hat = DMatrix::zeros(doc.p, u_true.ncols());
                    for (k, layer) in doc.layers.iter().take(u_true.ncols()).enumerate() {
                        for e in &layer.u_hat {
                            u_hat[(e.index, k)] = e.value / scales_vec[e.index];
                        }
                    }
                    let (a, b) =
                        metrics::selection_rates(&u_hat, &u_true).map_err(validation)?;
                    (Some(a), Some(b))
                }
                None => (None, None),
            };
            (Some(ee), Some(re), fnr, fpr)
        }
        None => (None, None, None, None),
    };
    let report = ScoreReport {
        pe,
        ee,
        re,
        fnr,
        fpr,
        r2_per_factor,
        forecast_error,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        fnr_fpr_units: ScoreReport::units_note(),
    };
    std::fs::write(args.out, serde_json::to_string_pretty(&report).unwrap()).map_err(runtime)?;
    println!("score: pe = {} -> {}", format_value(pe), args.out.display());
    Ok(())
}
