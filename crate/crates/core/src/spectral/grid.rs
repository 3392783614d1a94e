//! Periodic grids and the discrete Fourier transforms attached to them.
//!
//! Coefficients are stored in FFT order along every axis (index `j < N/2` is
//! wavenumber `j`, index `j >= N/2` is wavenumber `j - N`). The forward
//! transform carries the `1/N^d` factor so that `inverse(forward(u)) == u`
//! and a plain `cos(kx)` has coefficient `1/2` at `±k`.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::SpectralError;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Uniform periodic grid on the torus `[0, L)^d` with `N` nodes per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    modes: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, modes: usize, length: f64) -> Result<Self, SpectralError> {
        if dim == 0 {
            return Err(SpectralError::InvalidGrid("dimension must be at least 1".into()));
        }
        if modes < 4 || modes % 2 != 0 {
            return Err(SpectralError::InvalidGrid(format!(
                "modes per axis must be even and >= 4, got {modes}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(SpectralError::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if modes.checked_pow(dim as u32).is_none() {
            return Err(SpectralError::InvalidGrid("node count overflows".into()));
        }
        Ok(Self { dim, modes, length })
    }

    /// One-dimensional grid on `[0, 2π)`.
    pub fn periodic_1d(modes: usize) -> Result<Self, SpectralError> {
        Self::new(1, modes, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.modes as f64
    }

    /// `h^d`, the weight of one node in the rectangle rule.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of nodes `N^d`.
    pub fn len(&self) -> usize {
        self.modes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same torus, twice the resolution per axis.
    pub fn refined(&self) -> Self {
        Self { modes: self.modes * 2, ..*self }
    }

    pub fn with_modes(&self, modes: usize) -> Result<Self, SpectralError> {
        Self::new(self.dim, modes, self.length)
    }

    /// Signed integer wavenumber of FFT index `j` along one axis.
    pub fn index_wavenumber(&self, j: usize) -> i64 {
        if j < self.modes / 2 {
            j as i64
        } else {
            j as i64 - self.modes as i64
        }
    }

    /// Angular frequency `2π k / L` of FFT index `j`.
    pub fn angular_frequency(&self, j: usize) -> f64 {
        2.0 * PI / self.length * self.index_wavenumber(j) as f64
    }

    /// Multi-index (row-major, last axis fastest) of a flat node/coefficient index.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.modes;
            flat /= self.modes;
        }
        idx
    }

    /// Node coordinates `x_j = j h`.
    pub fn coordinates(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        self.unflatten(flat).into_iter().map(|j| j as f64 * h).collect()
    }

    /// Node coordinates of a one-dimensional grid.
    pub fn nodes_1d(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.modes).map(|j| j as f64 * h).collect()
    }

    /// Frequency vector of a flat coefficient index.
    pub fn frequency(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat).into_iter().map(|j| self.angular_frequency(j)).collect()
    }

    /// `|ξ|` for every coefficient, in storage order.
    pub fn frequency_magnitudes(&self) -> Vec<f64> {
        (0..self.len())
            .map(|flat| self.frequency(flat).iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    /// Euclidean norm of the integer wavenumber vector, in storage order.
    pub fn index_magnitudes(&self) -> Vec<f64> {
        (0..self.len())
            .map(|flat| {
                self.unflatten(flat)
                    .into_iter()
                    .map(|j| (self.index_wavenumber(j) as f64).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// True when any axis of the coefficient sits on the Nyquist index `N/2`.
    pub fn touches_nyquist(&self, flat: usize) -> bool {
        self.unflatten(flat).into_iter().any(|j| j == self.modes / 2)
    }

    /// Forward transform with `1/N^d` normalization.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.len());
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform_axes(&mut buf, false);
        let scale = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Inverse transform; returns the real part.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse_in_place(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Unnormalized inverse transform, in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len());
        self.transform_axes(buf, true);
    }

    fn transform_axes(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.modes;
        PLANNER.with(|planner| {
            let mut planner = planner.borrow_mut();
            let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
            // last axis is contiguous
            fft.process(buf);
            if self.dim == 1 {
                return;
            }
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for axis in 0..self.dim - 1 {
                let stride = n.pow((self.dim - 1 - axis) as u32);
                let block = stride * n;
                for start in (0..buf.len()).step_by(block) {
                    for offset in 0..stride {
                        let base = start + offset;
                        for (j, slot) in line.iter_mut().enumerate() {
                            *slot = buf[base + j * stride];
                        }
                        fft.process(&mut line);
                        for (j, value) in line.iter().enumerate() {
                            buf[base + j * stride] = *value;
                        }
                    }
                }
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(1, 6, 1.0).is_ok());
        assert!(Grid::new(1, 5, 1.0).is_err());
        assert!(Grid::new(1, 2, 1.0).is_err());
        assert!(Grid::new(0, 8, 1.0).is_err());
        assert!(Grid::new(1, 8, -1.0).is_err());
    }

    #[test]
    fn frequency_layout() {
        let g = Grid::periodic_1d(8).unwrap();
        let k: Vec<i64> = (0..8).map(|j| g.index_wavenumber(j)).collect();
        assert_eq!(k, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!((g.angular_frequency(3) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_has_half_coefficients() {
        let g = Grid::periodic_1d(16).unwrap();
        let u: Vec<f64> = g.nodes_1d().iter().map(|x| (3.0 * x).cos()).collect();
        let c = g.forward(&u);
        assert!((c[3].re - 0.5).abs() < 1e-14);
        assert!((c[13].re - 0.5).abs() < 1e-14);
        assert!(c[0].norm() < 1e-14);
    }

    #[test]
    fn two_dimensional_round_trip() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 31) as f64 - 15.0).collect();
        let back = g.inverse(&g.forward(&u));
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_dimensional_mode_lands_on_its_index() {
        let g = Grid::new(2, 8, 2.0 * PI).unwrap();
        let u: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.coordinates(i);
                (x[0] + 2.0 * x[1]).cos()
            })
            .collect();
        let c = g.forward(&u);
        // (1, 2) lives at flat index 1*8 + 2
        assert!((c[10].re - 0.5).abs() < 1e-13);
        assert!((c[7 * 8 + 6].re - 0.5).abs() < 1e-13);
    }
}
