use serde::{Deserialize, Serialize};

use super::{LevyError, LevyMeasureSpec};

/// `(drift, Gaussian part, jump measure)` of one driver `Z^k` on `ℝ^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    drift: Vec<f64>,
    /// `β`, the Wiener increments have covariance `dt β βᵀ`.
    gaussian: Vec<Vec<f64>>,
    jumps: LevyMeasureSpec,
    recentred: bool,
}

impl LevyTriplet {
    pub fn new(drift: Vec<f64>, gaussian: Vec<Vec<f64>>, jumps: LevyMeasureSpec) -> Result<Self, LevyError> {
        let m = jumps.dim();
        if drift.len() != m {
            return Err(LevyError::InvalidTriplet(format!("drift has length {}, expected {m}", drift.len())));
        }
        if gaussian.len() != m || gaussian.iter().any(|row| row.len() != m) {
            return Err(LevyError::InvalidTriplet(format!("gaussian part must be {m}x{m}")));
        }
        if drift.iter().chain(gaussian.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(LevyError::InvalidTriplet("non-finite entry".into()));
        }
        check_symmetric_psd(&gaussian)?;
        Ok(Self { drift, gaussian, jumps, recentred: false })
    }

    /// Standard one-dimensional Brownian motion.
    pub fn wiener() -> Self {
        Self {
            drift: vec![0.0],
            gaussian: vec![vec![1.0]],
            jumps: LevyMeasureSpec::empty(1).expect("dimension 1 is valid"),
            recentred: true,
        }
    }

    /// Pure-jump driver with zero drift, already recentred.
    pub fn pure_jump(jumps: LevyMeasureSpec) -> Self {
        let m = jumps.dim();
        Self { drift: vec![0.0; m], gaussian: vec![vec![0.0; m]; m], jumps, recentred: false }.recentre()
    }

    /// Absorbs `Σ_{|z|>=1} z λ` into the drift so that the jump part is the
    /// fully compensated `Y`. Idempotent.
    pub fn recentre(mut self) -> Self {
        if !self.recentred {
            let big = self.jumps.big_jump_mean();
            self.drift.iter_mut().zip(big).for_each(|(d, b)| *d += b);
            self.recentred = true;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.jumps.dim()
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn gaussian(&self) -> &[Vec<f64>] {
        &self.gaussian
    }

    pub fn jumps(&self) -> &LevyMeasureSpec {
        &self.jumps
    }

    pub fn is_recentred(&self) -> bool {
        self.recentred
    }

    /// True when the path has a Brownian component (including the Gaussian
    /// stand-in for small jumps).
    pub fn has_gaussian(&self) -> bool {
        self.gaussian.iter().flatten().any(|&v| v != 0.0) || self.jumps.small_jump_variance() > 0.0
    }

    pub fn has_jumps(&self) -> bool {
        !self.jumps.atoms().is_empty()
    }
}

/// Cholesky with a small relative jitter; fails on a negative pivot.
fn check_symmetric_psd(a: &[Vec<f64>]) -> Result<(), LevyError> {
    let m = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    for i in 0..m {
        for j in 0..i {
            if (a[i][j] - a[j][i]).abs() > 1e-12 * scale {
                return Err(LevyError::InvalidTriplet("gaussian part is not symmetric".into()));
            }
        }
    }
    let jitter = 1e-12 * scale;
    let mut l = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let pivot = a[i][i] + jitter - s;
                if pivot < 0.0 {
                    return Err(LevyError::InvalidTriplet("gaussian part is not positive semidefinite".into()));
                }
                l[i][i] = pivot.sqrt();
            } else {
                l[i][j] = if l[j][j] > 0.0 { (a[i][j] - s) / l[j][j] } else { 0.0 };
            }
        }
    }
    Ok(())
}
