//! Mild-solution time stepping for
//!
//! ```text
//! du = (a(ω,t) Δ^{α/2} u + f) dt + Σ_k h^k dW^k_t + Σ_k g^k · dY^k_t
//! ```
//!
//! on the torus: deterministic and linear solvers share one exponential-Euler
//! engine, and the semilinear equation is solved by Picard iteration over
//! linear solves.

mod config;
mod engine;
mod nonlinear;
mod solution;
mod timechange;

use thiserror::Error;

pub use config::{Diffusivity, SolverConfig, TimeField, TimeStack};
pub use engine::{
    solve_deterministic, solve_linear, stochastic_convolution_jump, stochastic_convolution_wiener, LinearProblem,
    PathDrivers,
};
pub use nonlinear::{
    evaluate_nonlinearity, fitted_contraction_ratio, picard_solve, picard_solve_ensemble, CoefficientSet,
    NonlinearTerms,
};
pub use solution::{Diagnostics, SolutionPath};
pub use timechange::{time_change_cross_check, time_change_study, TimeChangeStudy};


use crate::levy::LevyError;
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("jump drivers must be recentred before use (call LevyTriplet::recentre)")]
    NotRecentred,
    #[error("Picard iteration diverged; difference history {history:?}")]
    Divergence { history: Vec<f64> },
    #[error("solution produced non-finite norms")]
    NonFinite,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
