//! Lévy drivers reduced to finite activity: Wiener increments plus a
//! compound-Poisson jump part, their moment constants and compensated
//! stochastic integrals.

mod measure;
mod path;
mod triplet;

use thiserror::Error;

pub use measure::{Atom, LevyMeasureSpec, MomentConstants, RadialTail};
pub use path::{
    compensated_integral, sample_driver, sample_path, step_count, truncate_big_jumps, wiener_integral,
    write_paths_csv, DriverPath, JumpEvent, StepIntegrand, STEP_TOLERANCE,
};
pub use triplet::LevyTriplet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevyError {
    #[error("invalid Lévy measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid Lévy triplet: {0}")]
    InvalidTriplet(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid integrand: {0}")]
    Integrand(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<csv::Error> for LevyError {
    fn from(e: csv::Error) -> Self {
        LevyError::Io(e.to_string())
    }
}
