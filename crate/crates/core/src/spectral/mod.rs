//! Fourier-multiplier calculus on a periodic torus: fractional powers of the
//! Laplacian, Bessel potentials, the α-stable semigroup and `H^γ_p` norms.
//!
//! Every operator here is diagonal in Fourier space, so each one reduces to
//! scaling coefficients by a radial symbol `m(|ξ|)` and transforming back.

mod field;
mod grid;
mod symbol;

use thiserror::Error;

pub use field::{random_band_limited, random_band_limited_with_cutoff, Field, FieldStack, SpectralField};
pub use grid::Grid;
pub use symbol::{EtaIndex, MultiplierSymbol};

pub use rustfft::num_complex::Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} values for this grid, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("symbol {symbol} is not finite at |xi| = {frequency}")]
    SymbolDomain { symbol: String, frequency: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("{0}")]
    InvalidArgument(String),
}

/// Multiplies the Fourier coefficients of `u` by `m(ξ)`.
pub fn apply_symbol(u: &Field, m: &MultiplierSymbol) -> Result<Field, SpectralError> {
    let table = m.table(u.grid())?;
    apply_table(u, &table)
}

pub(crate) fn apply_table(u: &Field, table: &[f64]) -> Result<Field, SpectralError> {
    let mut s = u.to_spectral();
    s.scale_by(table);
    s.to_field()
}

/// `Δ^{β/2} u`, symbol `-|ξ|^β`.
pub fn frac_power(u: &Field, beta: f64) -> Result<Field, SpectralError> {
    if !(beta >= 0.0) {
        return Err(SpectralError::InvalidArgument(format!(
            "fractional power order must be >= 0, got {beta}; use bessel_potential for negative orders"
        )));
    }
    apply_symbol(u, &MultiplierSymbol::FracPower(beta))
}

/// `(1-Δ)^{μ/2} u`.
pub fn bessel_potential(u: &Field, mu: f64) -> Result<Field, SpectralError> {
    if mu == 0.0 {
        return Ok(u.clone());
    }
    apply_symbol(u, &MultiplierSymbol::Bessel(mu))
}

/// `T_t u` for the semigroup generated by `a Δ^{α/2}`.
pub fn semigroup_apply(u: &Field, t: f64, a: f64, alpha: f64) -> Result<Field, SpectralError> {
    if !(t >= 0.0) {
        return Err(SpectralError::InvalidArgument(format!("semigroup time must be >= 0, got {t}")));
    }
    if !(a > 0.0) {
        return Err(SpectralError::InvalidArgument(format!("diffusivity must be > 0, got {a}")));
    }
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(SpectralError::InvalidArgument(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    apply_symbol(u, &MultiplierSymbol::Semigroup { at: a * t, alpha })
}

/// Spectral partial derivative along `axis`; the Nyquist coefficient is dropped
/// so the result stays real.
pub fn partial_derivative(u: &Field, axis: usize) -> Result<Field, SpectralError> {
    let grid = *u.grid();
    if axis >= grid.dim() {
        return Err(SpectralError::InvalidArgument(format!("axis {axis} out of range")));
    }
    let mut s = u.to_spectral();
    for (flat, c) in s.coeffs_mut().iter_mut().enumerate() {
        if grid.touches_nyquist(flat) {
            *c = Complex64::new(0.0, 0.0);
        } else {
            let xi = grid.frequency(flat)[axis];
            *c *= Complex64::new(0.0, xi);
        }
    }
    s.to_field()
}

fn check_exponent(p: f64, min: f64) -> Result<(), SpectralError> {
    if p >= min {
        Ok(())
    } else {
        Err(SpectralError::InvalidArgument(format!("exponent p must be >= {min}, got {p}")))
    }
}

/// `‖u‖_{H^γ_p} = ‖(1-Δ)^{γ/2} u‖_p` by the rectangle rule.
pub fn sobolev_norm(u: &Field, gamma: f64, p: f64) -> Result<f64, SpectralError> {
    check_exponent(p, 1.0)?;
    if gamma == 0.0 {
        return Ok(u.lp_norm(p));
    }
    Ok(bessel_potential(u, gamma)?.lp_norm(p))
}

/// `‖ |(1-Δ)^{γ/2} g|_{ℓ₂} ‖_p`.
pub fn ell2_sobolev_norm(g: &FieldStack, gamma: f64, p: f64) -> Result<f64, SpectralError> {
    check_exponent(p, 2.0)?;
    let lifted = if gamma == 0.0 {
        g.clone()
    } else {
        let table = MultiplierSymbol::Bessel(gamma).table(g.grid())?;
        FieldStack::new(g.components().iter().map(|c| apply_table(c, &table)).collect::<Result<_, _>>()?)?
    };
    Ok(lifted.ell2_magnitude().lp_norm(p))
}
