//! Spectral simulation and verification harness for stochastic parabolic
//! equations driven by a random fractional Laplacian `a(t) Δ^{α/2}` on a
//! periodic torus, forced by Wiener noise, Lévy jump noise and space-time
//! white noise.
//!
//! * [`spectral`] — Fourier-multiplier calculus and Bessel-potential norms.
//! * [`levy`] — Lévy measures, driver paths and compensated stochastic integrals.
//! * [`integrator`] — exponential-Euler solvers and Picard iteration.
//! * [`verify`] — numerical checks of the a-priori inequalities.
//! * [`whitenoise`] — the `R_γ` kernel and the white-noise pipeline.

pub mod integrator;
pub mod levy;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod verify;
pub mod whitenoise;
