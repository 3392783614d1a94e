use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::IntegratorError;
use crate::levy::step_count;
use crate::rng::substream;
use crate::spectral::{Field, FieldStack, Grid};

/// Numerical and structural parameters shared by all solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub p: f64,
    pub horizon: f64,
    pub dt: f64,
    pub grid: Grid,
    /// Number of drivers `K`.
    pub drivers: usize,
    pub eps1: f64,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_iters")]
    pub picard_max_iters: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_picard_tol() -> f64 {
    1e-10
}

fn default_picard_iters() -> usize {
    60
}

impl SolverConfig {
    /// Config with `ε₁` at its default for `(α, p)`.
    pub fn new(alpha: f64, gamma: f64, p: f64, horizon: f64, dt: f64, grid: Grid) -> Self {
        Self {
            alpha,
            gamma,
            p,
            horizon,
            dt,
            grid,
            drivers: 1,
            eps1: Self::default_eps1(alpha, p),
            picard_tol: default_picard_tol(),
            picard_max_iters: default_picard_iters(),
            seed: 0,
        }
    }

    /// `0` for `p = 2`, otherwise `α(1/2 − 1/p) + 0.05`.
    pub fn default_eps1(alpha: f64, p: f64) -> f64 {
        if p == 2.0 {
            0.0
        } else {
            Self::eps1_threshold(alpha, p) + 0.05
        }
    }

    /// `α(1/2 − 1/p)`.
    pub fn eps1_threshold(alpha: f64, p: f64) -> f64 {
        alpha * (0.5 - 1.0 / p)
    }

    pub fn steps(&self) -> usize {
        step_count(self.horizon, self.dt).expect("validated config")
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|n| n as f64 * self.dt).collect()
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        let fail = |msg: String| Err(IntegratorError::Config(msg));
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return fail(format!("α = {} must lie in (0, 2)", self.alpha));
        }
        if !self.gamma.is_finite() {
            return fail("γ must be finite".into());
        }
        if !(self.p >= 2.0 && self.p.is_finite()) {
            return fail(format!("p = {} must satisfy 2 <= p < ∞", self.p));
        }
        step_count(self.horizon, self.dt).map_err(|e| IntegratorError::Config(e.to_string()))?;
        if self.drivers == 0 {
            return fail("driver count K must be at least 1".into());
        }
        if self.p == 2.0 {
            if self.eps1 != 0.0 {
                return fail(format!(
                    "ε₁ = {} but ε₁ = 0 is required when p = 2 (hypothesis of the linear Lévy estimate)",
                    self.eps1
                ));
            }
        } else {
            let threshold = Self::eps1_threshold(self.alpha, self.p);
            if !(self.eps1 > threshold) {
                return fail(format!(
                    "ε₁ = {} ≤ α(1/2−1/p) = {threshold}; ε₁ > α(1/2−1/p) is required when p > 2 \
                     (hypothesis of the linear Lévy estimate)",
                    self.eps1
                ));
            }
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iters == 0 {
            return fail("Picard tolerance must be positive and at least one iteration allowed".into());
        }
        Ok(())
    }
}

/// Time dependence of the diffusivity `a(ω, t)`.
#[derive(Clone)]
pub enum Diffusivity {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// One value per time node `t_0, …, t_N`.
    Sampled(Vec<f64>),
    /// Per-path random diffusivity: midpoint of `(δ, 1/δ)` plus an
    /// Ornstein–Uhlenbeck perturbation, clipped to stay strictly inside.
    OrnsteinUhlenbeck { delta: f64, reversion: f64, volatility: f64 },
}

impl fmt::Debug for Diffusivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(a) => write!(f, "Constant({a})"),
            Self::Function(_) => write!(f, "Function(..)"),
            Self::Sampled(v) => write!(f, "Sampled({} values)", v.len()),
            Self::OrnsteinUhlenbeck { delta, reversion, volatility } => {
                write!(f, "OrnsteinUhlenbeck(delta={delta}, reversion={reversion}, volatility={volatility})")
            }
        }
    }
}

impl Diffusivity {
    /// Concrete diffusivity for Monte Carlo path `path`.
    pub fn resolve(&self, cfg: &SolverConfig, path: u64) -> Diffusivity {
        match self {
            Self::OrnsteinUhlenbeck { delta, reversion, volatility } => {
                let steps = cfg.steps();
                let mut rng = substream(cfg.seed, path, u64::MAX);
                let mid = 0.5 * (delta + 1.0 / delta);
                let lo = delta + 1e-3 * (mid - delta);
                let hi = 1.0 / delta - 1e-3 * (1.0 / delta - mid);
                let decay = (-reversion * cfg.dt).exp();
                let sd = if *reversion > 0.0 {
                    volatility * ((1.0 - decay * decay) / (2.0 * reversion)).sqrt()
                } else {
                    volatility * cfg.dt.sqrt()
                };
                let mut x = 0.0;
                let mut values = Vec::with_capacity(steps + 1);
                for _ in 0..=steps {
                    values.push((mid + x).clamp(lo, hi));
                    x = decay * x + sd * rng.sample::<f64, _>(StandardNormal);
                }
                Self::Sampled(values)
            }
            other => other.clone(),
        }
    }

    /// `a(t_n)`.
    pub fn at(&self, n: usize, t: f64) -> f64 {
        match self {
            Self::Constant(a) => *a,
            Self::Function(f) => f(t),
            Self::Sampled(v) => v[n.min(v.len() - 1)],
            Self::OrnsteinUhlenbeck { delta, .. } => 0.5 * (delta + 1.0 / delta),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_))
    }

    /// Checks `δ < a(t_n) < 1/δ` on every time node.
    pub fn validate(&self, delta: f64, cfg: &SolverConfig) -> Result<(), IntegratorError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(IntegratorError::Config(format!("δ = {delta} must lie in (0, 1)")));
        }
        if let Self::Sampled(v) = self {
            if v.len() != cfg.steps() + 1 {
                return Err(IntegratorError::Config(format!(
                    "sampled diffusivity has {} values, expected {}",
                    v.len(),
                    cfg.steps() + 1
                )));
            }
        }
        for n in 0..=cfg.steps() {
            let a = self.at(n, n as f64 * cfg.dt);
            if !(a > delta && a < 1.0 / delta) {
                return Err(IntegratorError::Config(format!(
                    "diffusivity a({}) = {a} leaves (δ, 1/δ) = ({delta}, {})",
                    n as f64 * cfg.dt,
                    1.0 / delta
                )));
            }
        }
        Ok(())
    }
}

/// Time-indexed field, evaluated at the left endpoint `t_n` of each step.
#[derive(Clone)]
pub enum TimeField {
    Zero,
    Constant(Field),
    /// `values[i]` is the value at step `offset + i`.
    Steps { offset: usize, values: Vec<Field> },
    Function(Arc<dyn Fn(f64) -> Field + Send + Sync>),
}

impl fmt::Debug for TimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant(_) => write!(f, "Constant(..)"),
            Self::Steps { offset, values } => write!(f, "Steps(offset={offset}, {} values)", values.len()),
            Self::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl TimeField {
    pub fn steps(values: Vec<Field>) -> Self {
        Self::Steps { offset: 0, values }
    }

    /// Value at step `n` (time `t`); `None` stands for the zero field.
    pub fn at(&self, n: usize, t: f64) -> Option<Field> {
        match self {
            Self::Zero => None,
            Self::Constant(f) => Some(f.clone()),
            Self::Steps { offset, values } => Some(values[n - offset].clone()),
            Self::Function(f) => Some(f(t)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }
}

/// Time-indexed `ℓ₂`-valued field.
#[derive(Clone)]
pub enum TimeStack {
    Zero,
    Constant(FieldStack),
    Steps { offset: usize, values: Vec<FieldStack> },
    Function(Arc<dyn Fn(f64) -> FieldStack + Send + Sync>),
}

impl fmt::Debug for TimeStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant(s) => write!(f, "Constant({} components)", s.count()),
            Self::Steps { offset, values } => write!(f, "Steps(offset={offset}, {} values)", values.len()),
            Self::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl TimeStack {
    pub fn steps(values: Vec<FieldStack>) -> Self {
        Self::Steps { offset: 0, values }
    }

    pub fn at(&self, n: usize, t: f64) -> Option<FieldStack> {
        match self {
            Self::Zero => None,
            Self::Constant(s) => Some(s.clone()),
            Self::Steps { offset, values } => Some(values[n - offset].clone()),
            Self::Function(f) => Some(f(t)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(p: f64, eps1: f64) -> SolverConfig {
        let mut c = SolverConfig::new(1.0, 0.0, p, 1.0, 0.1, Grid::periodic_1d(16).unwrap());
        c.eps1 = eps1;
        c
    }

    #[test]
    fn eps1_rule() {
        assert!(cfg(2.0, 0.0).validate().is_ok());
        assert!(cfg(2.0, 0.1).validate().is_err());
        let err = cfg(4.0, 0.0).validate().unwrap_err().to_string();
        assert!(err.contains("α(1/2−1/p)"), "{err}");
        assert!(cfg(4.0, 0.25).validate().is_err());
        assert!(cfg(4.0, 0.26).validate().is_ok());
        assert!((SolverConfig::default_eps1(1.0, 4.0) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn other_checks() {
        let mut c = cfg(2.0, 0.0);
        c.alpha = 2.0;
        assert!(c.validate().is_err());
        let mut c = cfg(2.0, 0.0);
        c.dt = 0.3;
        assert!(c.validate().is_err());
        let mut c = cfg(2.0, 0.0);
        c.p = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn diffusivity_bounds() {
        let c = cfg(2.0, 0.0);
        assert!(Diffusivity::Constant(1.0).validate(0.5, &c).is_ok());
        assert!(Diffusivity::Constant(2.5).validate(0.5, &c).is_err());
        let f = Diffusivity::Function(Arc::new(|t: f64| 1.0 + 0.5 * t.sin()));
        assert!(f.validate(0.4, &c).is_ok());
        let ou = Diffusivity::OrnsteinUhlenbeck { delta: 0.5, reversion: 1.0, volatility: 3.0 }.resolve(&c, 7);
        assert!(ou.validate(0.5, &c).is_ok());
        match ou {
            Diffusivity::Sampled(v) => assert!(v.windows(2).any(|w| w[0] != w[1])),
            _ => panic!("expected samples"),
        }
    }
}
