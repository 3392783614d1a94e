//! Space-time white noise in one dimension.
//!
//! A cylindrical driver `Σ_k η^k Z^k` over an orthonormal basis turns the
//! equation into one with countably many scalar drivers and noise
//! coefficients `g^k(u) = ξ h(u) η^k`. This module provides the exponent
//! bookkeeping, the trigonometric basis, the kernel `R_γ` of the Bessel
//! potential `(1−Δ)^{(γ+α/2)/2}` together with the weight `h̄`, the
//! corresponding norm identity check, and the solver front end.

mod basis;
mod kernel;
mod lemma;
mod solve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrator::IntegratorError;
use crate::spectral::{Grid, SpectralError};
use crate::verify::VerifyError;

pub use basis::BasisSpec;
pub use kernel::{hbar, r_gamma_kernel, write_kernel_csv, BesselKernel};
pub use lemma::{check_lemma_l_last1, lemma_l_last1_sweep};
pub use solve::{solve_white_noise, NoiseAmplitude, WhiteNoiseDrivers};

#[derive(Debug, Error)]
pub enum WhiteNoiseError {
    #[error("exponents violate the white-noise constraints: {0}")]
    Exponents(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("R_γ is singular at x = 0")]
    SingularPoint,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Exponents and truncation of the white-noise setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhiteNoiseConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub p: f64,
    /// Hölder conjugate of `r`; `inf` when `r = 1`.
    pub s: f64,
    pub r: f64,
    /// Number of basis functions `η^k` kept.
    pub k_basis: usize,
    pub grid: Grid,
    /// Half-width of the real-line domain used for kernel integrals;
    /// defaults to eight torus lengths.
    #[serde(default)]
    pub kernel_radius: Option<f64>,
}

/// Outcome of [`validate_exponents`]: one message per violated constraint.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExponentCheck {
    pub violations: Vec<String>,
}

impl ExponentCheck {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl WhiteNoiseConfig {
    pub fn new(gamma: f64, alpha: f64, p: f64, r: f64, k_basis: usize, grid: Grid) -> Self {
        let s = if r == 1.0 { f64::INFINITY } else { r / (r - 1.0) };
        Self { gamma, alpha, p, s, r, k_basis, grid, kernel_radius: None }
    }

    /// `γ + α/2`, the order of the Bessel potential whose kernel is `R_γ`.
    pub fn order(&self) -> f64 {
        self.gamma + self.alpha / 2.0
    }

    pub fn radius(&self) -> f64 {
        self.kernel_radius.unwrap_or(8.0 * self.grid.length())
    }

    /// The exponent constraints as a `Result`, for use as a precondition.
    pub fn require_valid(&self) -> Result<(), WhiteNoiseError> {
        let check = validate_exponents(self);
        if check.is_valid() {
            Ok(())
        } else {
            Err(WhiteNoiseError::Exponents(check.violations.join("; ")))
        }
    }

    /// `γ ∈ (−α, (−1−α)/2)`, needed for function-valued solutions.
    pub fn theorem_range_violation(&self) -> Option<String> {
        let (lo, hi) = (-self.alpha, (-1.0 - self.alpha) / 2.0);
        if self.gamma > lo && self.gamma < hi {
            None
        } else if lo >= hi {
            Some(format!("the range γ ∈ (−α, (−1−α)/2) is empty for α = {} ≤ 1", self.alpha))
        } else {
            Some(format!("γ = {} lies outside (−α, (−1−α)/2) = ({lo}, {hi})", self.gamma))
        }
    }
}

/// Checks `0 > γ+α/2 > −1`, `p ≥ 2r ≥ 2`, `1 ≤ r < (2γ+α+2)^{-1}` and
/// `1/s + 1/r = 1`, naming each violated constraint.
pub fn validate_exponents(cfg: &WhiteNoiseConfig) -> ExponentCheck {
    let mut violations = Vec::new();
    let order = cfg.order();
    if !(order < 0.0 && order > -1.0) {
        violations.push(format!("0 > γ+α/2 > −1 fails: γ+α/2 = {order}"));
    }
    if !(cfg.p >= 2.0 * cfg.r && 2.0 * cfg.r >= 2.0) {
        violations.push(format!("p ≥ 2r ≥ 2 fails: p = {}, 2r = {}", cfg.p, 2.0 * cfg.r));
    }
    let bound = 1.0 / (2.0 * cfg.gamma + cfg.alpha + 2.0);
    if !(cfg.r >= 1.0 && cfg.r < bound) {
        violations.push(format!("1 ≤ r < (2γ+α+2)^(-1) fails: r = {}, (2γ+α+2)^(-1) = {bound}", cfg.r));
    }
    if !((1.0 / cfg.s + 1.0 / cfg.r - 1.0).abs() < 1e-12) {
        violations.push(format!("1/s + 1/r = 1 fails: s = {}, r = {}", cfg.s, cfg.r));
    }
    if cfg.grid.dim() != 1 {
        violations.push(format!("white noise needs a one-dimensional grid, got d = {}", cfg.grid.dim()));
    }
    ExponentCheck { violations }
}
