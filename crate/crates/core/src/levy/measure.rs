use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::LevyError;

/// One point mass `λ δ_z` of a finite-activity Lévy measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub mark: Vec<f64>,
    pub rate: f64,
}

impl Atom {
    pub fn norm(&self) -> f64 {
        self.mark.iter().map(|z| z * z).sum::<f64>().sqrt()
    }
}

/// Rotationally symmetric, truncated-stable tail with density
/// `c |z|^{-m-α_L}` on `ε <= |z| <= R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialTail {
    pub intensity: f64,
    pub stability: f64,
    /// Small-jump cutoff `ε`.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    pub radius: f64,
    /// Number of radial shells the density is lumped into.
    #[serde(default = "default_shells")]
    pub shells: usize,
    /// Replace the removed jumps `|z| < ε` by a Brownian motion with the same
    /// covariance (Asmussen–Rosiński) instead of dropping them.
    #[serde(default)]
    pub gaussian_small_jumps: bool,
}

fn default_cutoff() -> f64 {
    1e-2
}

fn default_shells() -> usize {
    16
}

/// `∫_a^b r^s dr`.
fn power_integral(s: f64, a: f64, b: f64) -> f64 {
    if (s + 1.0).abs() < 1e-12 {
        (b / a).ln()
    } else {
        (b.powf(s + 1.0) - a.powf(s + 1.0)) / (s + 1.0)
    }
}

/// Surface measure of the unit sphere in `ℝ^m`.
fn sphere_area(m: usize) -> f64 {
    let half = m as f64 / 2.0;
    2.0 * PI.powf(half) / statrs::function::gamma::gamma(half)
}

impl RadialTail {
    fn validate(&self) -> Result<(), LevyError> {
        let bad = |msg: &str| Err(LevyError::InvalidMeasure(msg.to_string()));
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return bad("tail intensity must be positive");
        }
        if !(self.stability > 0.0 && self.stability < 2.0) {
            return bad("tail stability index must lie in (0, 2)");
        }
        if !(self.cutoff > 0.0 && self.radius > self.cutoff && self.radius.is_finite()) {
            return bad("tail needs 0 < cutoff < radius < inf");
        }
        if self.shells == 0 {
            return bad("tail needs at least one shell");
        }
        Ok(())
    }

    /// Per-coordinate variance rate of the jumps below the cutoff,
    /// `(1/m) ∫_{|z|<ε} |z|² ν(dz)`.
    pub fn small_jump_variance(&self, dim: usize) -> f64 {
        let s = sphere_area(dim) * self.intensity;
        s * self.cutoff.powf(2.0 - self.stability) / (2.0 - self.stability) / dim as f64
    }

    /// Lumps the density into atoms. Each geometric shell `[r_0, r_1]` becomes
    /// `2m` atoms at `±r* e_i` with total rate equal to the shell mass and
    /// `r*` chosen so the shell's second moment is preserved exactly.
    fn atoms(&self, dim: usize) -> Vec<Atom> {
        let s = sphere_area(dim) * self.intensity;
        let ratio = (self.radius / self.cutoff).powf(1.0 / self.shells as f64);
        let mut atoms = Vec::with_capacity(self.shells * 2 * dim);
        for i in 0..self.shells {
            let r0 = self.cutoff * ratio.powi(i as i32);
            let r1 = if i + 1 == self.shells { self.radius } else { r0 * ratio };
            let mass = s * power_integral(-1.0 - self.stability, r0, r1);
            let second = s * power_integral(1.0 - self.stability, r0, r1);
            let r_star = (second / mass).sqrt();
            let share = mass / (2 * dim) as f64;
            for axis in 0..dim {
                for sign in [1.0, -1.0] {
                    let mut mark = vec![0.0; dim];
                    mark[axis] = sign * r_star;
                    atoms.push(Atom { mark, rate: share });
                }
            }
        }
        atoms
    }
}

/// Finite-activity Lévy measure on `ℝ^m`, stored as a list of atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyMeasureSpec {
    dim: usize,
    atoms: Vec<Atom>,
    /// Per-coordinate variance rate standing in for removed small jumps.
    small_jump_variance: f64,
}

impl LevyMeasureSpec {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self, LevyError> {
        if dim == 0 {
            return Err(LevyError::InvalidMeasure("mark dimension must be at least 1".into()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.mark.len() != dim {
                return Err(LevyError::InvalidMeasure(format!(
                    "atom {i} has a mark of length {}, expected {dim}",
                    a.mark.len()
                )));
            }
            if !(a.rate > 0.0 && a.rate.is_finite()) || a.mark.iter().any(|z| !z.is_finite()) {
                return Err(LevyError::InvalidMeasure(format!("atom {i} needs a finite mark and a positive rate")));
            }
        }
        Ok(Self { dim, atoms, small_jump_variance: 0.0 })
    }

    /// The zero measure: no jumps.
    pub fn empty(dim: usize) -> Result<Self, LevyError> {
        Self::new(dim, Vec::new())
    }

    /// One-dimensional symmetric measure `λ(δ_{+z} + δ_{-z})`.
    pub fn symmetric(mark: f64, rate: f64) -> Result<Self, LevyError> {
        Self::new(1, vec![Atom { mark: vec![mark], rate }, Atom { mark: vec![-mark], rate }])
    }

    /// Appends the discretization of a radial tail.
    pub fn with_radial_tail(mut self, tail: &RadialTail) -> Result<Self, LevyError> {
        tail.validate()?;
        self.atoms.extend(tail.atoms(self.dim));
        if tail.gaussian_small_jumps {
            self.small_jump_variance += tail.small_jump_variance(self.dim);
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn small_jump_variance(&self) -> f64 {
        self.small_jump_variance
    }

    /// `Λ = Σ λ_i`.
    pub fn total_rate(&self) -> f64 {
        self.atoms.iter().map(|a| a.rate).sum()
    }

    /// `Σ z_i λ_i`, the compensator rate of the jump part.
    pub fn mean_jump(&self) -> Vec<f64> {
        self.weighted_mark_sum(|_| true)
    }

    /// `Σ_{|z_i| >= 1} z_i λ_i`.
    pub fn big_jump_mean(&self) -> Vec<f64> {
        self.weighted_mark_sum(|a| a.norm() >= 1.0)
    }

    fn weighted_mark_sum(&self, keep: impl Fn(&Atom) -> bool) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for a in self.atoms.iter().filter(|a| keep(a)) {
            out.iter_mut().zip(&a.mark).for_each(|(o, z)| *o += z * a.rate);
        }
        out
    }

    /// `ĉ_q = (Σ |z_i|^q λ_i)^{1/q}`.
    pub fn moment_constant(&self, q: f64) -> Result<f64, LevyError> {
        if !(q >= 1.0) {
            return Err(LevyError::InvalidMeasure(format!("moment order must be >= 1, got {q}")));
        }
        let sum: f64 = self.atoms.iter().map(|a| a.norm().powf(q) * a.rate).sum();
        Ok(sum.powf(1.0 / q))
    }

    pub fn moment_constants(&self, p: f64) -> Result<MomentConstants, LevyError> {
        let c2 = self.moment_constant(2.0)?;
        let cp = self.moment_constant(p)?;
        Ok(MomentConstants { c2, cp, chat: c2.max(cp) })
    }
}

/// `ĉ_2`, `ĉ_p` and their maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentConstants {
    pub c2: f64,
    pub cp: f64,
    pub chat: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_moments() {
        let lambda = 1.7;
        let spec = LevyMeasureSpec::symmetric(1.0, lambda).unwrap();
        assert!((spec.moment_constant(2.0).unwrap() - (2.0 * lambda).sqrt()).abs() < 1e-14);
        assert!((spec.moment_constant(4.0).unwrap() - (2.0 * lambda).powf(0.25)).abs() < 1e-14);
        assert_eq!(spec.mean_jump(), vec![0.0]);
        assert_eq!(LevyMeasureSpec::empty(2).unwrap().moment_constant(3.0).unwrap(), 0.0);
        assert!(spec.moment_constant(0.5).is_err());
    }

    #[test]
    fn interpolated_moment_is_dominated() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.random_range(1..6);
            let atoms = (0..n)
                .map(|_| Atom { mark: vec![rng.random_range(-3.0..3.0)], rate: rng.random_range(0.1..4.0) })
                .collect();
            let spec = LevyMeasureSpec::new(1, atoms).unwrap();
            let mc = spec.moment_constants(4.0).unwrap();
            assert!(spec.moment_constant(3.0).unwrap() <= mc.chat * (1.0 + 1e-12));
        }
    }

    #[test]
    fn moment_constant_is_continuous_in_q() {
        let spec = LevyMeasureSpec::new(
            1,
            vec![Atom { mark: vec![0.3], rate: 2.0 }, Atom { mark: vec![-2.5], rate: 0.4 }],
        )
        .unwrap();
        let qs: Vec<f64> = (0..=400).map(|i| 1.0 + i as f64 * 0.02).collect();
        let values: Vec<f64> = qs.iter().map(|&q| spec.moment_constant(q).unwrap()).collect();
        for w in values.windows(2) {
            assert!((w[1] - w[0]).abs() < 0.02, "{w:?}");
        }
    }

    #[test]
    fn tail_shells_preserve_mass_and_second_moment() {
        let tail = RadialTail {
            intensity: 0.5,
            stability: 1.2,
            cutoff: 0.01,
            radius: 4.0,
            shells: 12,
            gaussian_small_jumps: true,
        };
        for dim in [1, 2, 3] {
            let spec = LevyMeasureSpec::empty(dim).unwrap().with_radial_tail(&tail).unwrap();
            let s = sphere_area(dim) * tail.intensity;
            let mass = s * (0.01f64.powf(-1.2) - 4.0f64.powf(-1.2)) / 1.2;
            let second = s * (4.0f64.powf(0.8) - 0.01f64.powf(0.8)) / 0.8;
            assert!((spec.total_rate() - mass).abs() < 1e-9 * mass);
            assert!((spec.moment_constant(2.0).unwrap().powi(2) - second).abs() < 1e-9 * second);
            assert!(spec.mean_jump().iter().all(|m| m.abs() < 1e-9));
            let small = s * 0.01f64.powf(0.8) / 0.8 / dim as f64;
            assert!((spec.small_jump_variance() - small).abs() < 1e-14);
        }
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(LevyMeasureSpec::new(1, vec![Atom { mark: vec![1.0, 2.0], rate: 1.0 }]).is_err());
        assert!(LevyMeasureSpec::new(1, vec![Atom { mark: vec![1.0], rate: 0.0 }]).is_err());
        assert!(LevyMeasureSpec::new(0, vec![]).is_err());
    }
}
