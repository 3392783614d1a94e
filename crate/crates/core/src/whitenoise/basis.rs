use serde::{Deserialize, Serialize};

use super::WhiteNoiseError;
use crate::spectral::{Field, FieldStack, Grid};

/// Real trigonometric orthonormal basis of `L₂(0, L)`:
/// `1/√L, √(2/L) cos(2πkx/L), √(2/L) sin(2πkx/L), k = 1, 2, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub grid: Grid,
    pub count: usize,
}

impl BasisSpec {
    /// The Nyquist cosine is not orthonormal on the grid, so at most `N − 1`
    /// functions are available.
    pub fn new(grid: Grid, count: usize) -> Result<Self, WhiteNoiseError> {
        if grid.dim() != 1 {
            return Err(WhiteNoiseError::Config("the basis is one-dimensional".into()));
        }
        if count == 0 || count >= grid.modes() {
            return Err(WhiteNoiseError::Config(format!(
                "basis size {count} must lie in 1..{} for {} grid points",
                grid.modes(),
                grid.modes()
            )));
        }
        Ok(Self { grid, count })
    }

    /// `η^k` for `k = 0..count` (zero-based).
    pub fn function(&self, k: usize) -> Field {
        let l = self.grid.length();
        let w = 2.0 * std::f64::consts::PI / l;
        let amp = (2.0 / l).sqrt();
        let freq = k.div_ceil(2) as f64;
        let f = |x: &[f64]| match k {
            0 => 1.0 / l.sqrt(),
            _ if k % 2 == 1 => amp * (w * freq * x[0]).cos(),
            _ => amp * (w * freq * x[0]).sin(),
        };
        Field::from_fn(self.grid, f).expect("finite basis values")
    }

    pub fn functions(&self) -> Vec<Field> {
        (0..self.count).map(|k| self.function(k)).collect()
    }

    /// `(w η^k)_k` as a stack.
    pub fn shaped(&self, w: &Field) -> Result<FieldStack, WhiteNoiseError> {
        Ok(FieldStack::new(self.functions().iter().map(|e| e.mul(w)).collect::<Result<_, _>>()?)?)
    }
}
