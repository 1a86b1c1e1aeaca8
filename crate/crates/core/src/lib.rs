//! Pairwise likelihood estimation for multivariate models with mixed ordinal
//! (probit) and Gaussian responses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod estimation;
pub mod formula;
pub mod kernels;
pub mod likelihood;
pub mod model;
pub mod optim;
pub mod report;
pub mod simulate;

pub use error::{Error, Result};
pub use estimation::{fit, FitConfig, FitResult, Solver};
pub use formula::{parse_formula, FormulaSpec};
pub use model::{ModelSpec, ParameterSet, ResponseParams, ResponseSpec};
