//! Sequential scaled sparse factor regression.
//!
//! Recovers a jointly low-rank and row-sparse coefficient matrix in the
//! multi-response linear model `Y = X C + E` by (1) extracting latent factors
//! from the regular eigenvalue problem on `Y Y^T / (n q)`, (2) selecting the
//! rank with a BIC-type criterion over the factor layers, and (3) regressing
//! each factor on the predictors with a scaled (self-calibrating) Lasso.
//!
//! Modules:
//! - [`matio`]: dataset model, CSV/TSV matrix I/O, column standardization
//! - [`solvers`]: coordinate-descent Lasso, scaled Lasso, KKT certification
//! - [`factorcore`]: factor extraction, rank selection, fitting, prediction
//! - [`simgen`]: seeded synthetic-data generators for the benchmark designs
//! - [`metrics`]: scoring of fits against ground truth and held-out data

pub mod factorcore;
pub mod matio;
pub mod metrics;
pub mod oracles;
pub mod simgen;
pub mod solvers;

pub use factorcore::{
    build_var_design, fit_sess, predict, select_rank, top_eigenpairs, CriterionVariant, Layer,
    SessFit, SessOptions, SimTruth,
};
pub use matio::{destandardize_coef, load_matrix, save_matrix, standardize, Dataset, MatrixFormat};
pub use solvers::{kkt_check, lasso_cd, scaled_lasso, LassoConfig, ScaledLassoResult};
