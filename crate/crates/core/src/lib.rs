//! Estimators of a linear exposure effect under spatial confounding, built on
//! a thin-plate regression spline smoother with automatic smoothing parameter
//! selection, plus a Matérn Gaussian process simulation harness for comparing
//! them.

pub mod cli;
mod error;
pub mod estimators;
pub mod field;
pub mod linalg;
pub mod pls;
pub mod report;
pub mod rng;
pub mod search;
pub mod sim;
pub mod special;
pub mod tprs;

pub use error::{Error, Result};
pub use estimators::{BetaEstimate, Dataset, ExposureKind, Method, MethodSpec};
pub use field::{LocationSet, MaternSpec};
pub use pls::{fit_penalized, select_lambda, Criterion, Family, FitResult, ModelSpec};
pub use sim::{scenario_grid, GridKind, MetricsRow, ReplicationRecord, RunOptions, Scenario};
pub use tprs::{build_tprs, TprsBasis, TprsKernel};
