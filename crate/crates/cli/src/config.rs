//! The TOML experiment description. One file fully determines a run.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fracspde::integrator::{Diffusivity, SolverConfig, TimeField};
use fracspde::levy::{Atom, LevyMeasureSpec};
use fracspde::spectral::{Field, Grid};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Deterministic,
    LinearWiener,
    LinearLevy,
    NonlinearPicard,
    Whitenoise,
    VerifySuite,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Self::Deterministic,
        Self::LinearWiener,
        Self::LinearLevy,
        Self::NonlinearPicard,
        Self::Whitenoise,
        Self::VerifySuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Deterministic => "deterministic",
            Self::LinearWiener => "linear_wiener",
            Self::LinearLevy => "linear_levy",
            Self::NonlinearPicard => "nonlinear_picard",
            Self::Whitenoise => "whitenoise",
            Self::VerifySuite => "verify_suite",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::Deterministic => "noise-free fractional heat equation; semigroup and time-change checks",
            Self::LinearWiener => "linear equation driven by K Wiener processes; a-priori estimates",
            Self::LinearLevy => "linear equation driven by K compensated pure-jump drivers; a-priori estimates",
            Self::NonlinearPicard => "semilinear equation solved by Picard iteration; contraction report",
            Self::Whitenoise => "space-time white noise in d = 1; kernel export and weight lemma check",
            Self::VerifySuite => "the default battery of inequality checks",
        }
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Top-level configuration. `mc_paths` and `refinement_levels` fall back to
/// per-experiment defaults when absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mc_paths: Option<usize>,
    #[serde(default)]
    pub refinement_levels: Option<usize>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub nonlinear: NonlinearSection,
    #[serde(default)]
    pub whitenoise: WhiteNoiseSection,
    #[serde(default)]
    pub verify: VerifySection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("fracspde-out")
}

impl ExperimentConfig {
    pub fn minimal(experiment: Experiment) -> Self {
        Self {
            experiment,
            output_dir: default_output_dir(),
            seed: 0,
            mc_paths: None,
            refinement_levels: None,
            solver: SolverSection::default(),
            data: DataSection::default(),
            noise: NoiseSection::default(),
            nonlinear: NonlinearSection::default(),
            whitenoise: WhiteNoiseSection::default(),
            verify: VerifySection::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn paths_or(&self, default: usize) -> usize {
        self.mc_paths.unwrap_or(default)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let s = &self.solver;
        Grid::new(s.dim, s.modes, s.length).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The validated solver configuration.
    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(s.alpha, s.gamma, s.p, s.horizon, s.dt, self.grid()?);
        cfg.drivers = s.drivers;
        cfg.seed = self.seed;
        if let Some(e) = s.eps1 {
            cfg.eps1 = e;
        }
        if let Some(t) = s.picard_tol {
            cfg.picard_tol = t;
        }
        if let Some(n) = s.picard_max_iters {
            cfg.picard_max_iters = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub alpha: f64,
    pub gamma: f64,
    pub p: f64,
    pub horizon: f64,
    pub dt: f64,
    pub dim: usize,
    pub modes: usize,
    pub length: f64,
    /// Number of drivers `K`.
    pub drivers: usize,
    /// Defaults to `0` for `p = 2` and just above `α(1/2 − 1/p)` otherwise.
    pub eps1: Option<f64>,
    pub picard_tol: Option<f64>,
    pub picard_max_iters: Option<usize>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            gamma: 0.0,
            p: 2.0,
            horizon: 1.0,
            dt: 0.01,
            dim: 1,
            modes: 32,
            length: 2.0 * PI,
            drivers: 1,
            eps1: None,
            picard_tol: None,
            picard_max_iters: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trig {
    Sin,
    Cos,
}

/// `amplitude · sin|cos(2π k x_axis / L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: i64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "sin")]
    pub kind: Trig,
    #[serde(default)]
    pub axis: usize,
}

fn one() -> f64 {
    1.0
}

fn sin() -> Trig {
    Trig::Sin
}

impl Mode {
    pub fn new(k: i64, amplitude: f64, kind: Trig) -> Self {
        Self { k, amplitude, kind, axis: 0 }
    }

    pub fn constant(amplitude: f64) -> Self {
        Self::new(0, amplitude, Trig::Cos)
    }
}

/// Sum of modes on `grid`; the empty sum is zero.
pub fn modes_field(modes: &[Mode], grid: Grid) -> Result<Field, CliError> {
    if let Some(m) = modes.iter().find(|m| m.axis >= grid.dim()) {
        return Err(CliError::Config(format!("mode axis {} out of range for dimension {}", m.axis, grid.dim())));
    }
    if let Some(m) = modes.iter().find(|m| 2 * m.k.unsigned_abs() as usize >= grid.modes()) {
        return Err(CliError::Config(format!(
            "wavenumber {} is not resolved by {} grid points (need |k| < N/2)",
            m.k,
            grid.modes()
        )));
    }
    let w = 2.0 * PI / grid.length();
    Field::from_fn(grid, |x| {
        modes
            .iter()
            .map(|m| {
                let phase = w * m.k as f64 * x[m.axis];
                m.amplitude
                    * match m.kind {
                        Trig::Sin => phase.sin(),
                        Trig::Cos => phase.cos(),
                    }
            })
            .sum()
    })
    .map_err(|e| CliError::Config(e.to_string()))
}

pub fn modes_time_field(modes: &[Mode], grid: Grid) -> Result<TimeField, CliError> {
    Ok(if modes.iter().all(|m| m.amplitude == 0.0) {
        TimeField::Zero
    } else {
        TimeField::Constant(modes_field(modes, grid)?)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusivitySpec {
    Constant { value: f64 },
    /// `mean + amplitude · sin(frequency · t)`.
    Oscillating { mean: f64, amplitude: f64, frequency: f64 },
    /// Per-path random diffusivity inside `(δ, 1/δ)`.
    OrnsteinUhlenbeck { reversion: f64, volatility: f64 },
}

impl DiffusivitySpec {
    pub fn build(&self, delta: f64) -> Diffusivity {
        match *self {
            Self::Constant { value } => Diffusivity::Constant(value),
            Self::Oscillating { mean, amplitude, frequency } => {
                Diffusivity::Function(Arc::new(move |t| mean + amplitude * (frequency * t).sin()))
            }
            Self::OrnsteinUhlenbeck { reversion, volatility } => {
                Diffusivity::OrnsteinUhlenbeck { delta, reversion, volatility }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub u0: Vec<Mode>,
    /// Time-independent forcing.
    pub f: Vec<Mode>,
    pub diffusivity: DiffusivitySpec,
    /// Ellipticity bound: `δ ≤ a ≤ 1/δ`.
    pub delta: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            u0: vec![Mode::new(1, 1.0, Trig::Sin)],
            f: Vec::new(),
            diffusivity: DiffusivitySpec::Constant { value: 1.0 },
            delta: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub mark: f64,
    pub rate: f64,
}

/// Noise coefficients for the linear experiments: `h^k = A/(k+1)·cos((k+1)x)`
/// for Wiener drivers and `g^k = A/(k+1)·sin((k+1)x)` for jump drivers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub amplitude: f64,
    /// Atoms of the scalar jump measure.
    pub atoms: Vec<AtomSpec>,
    /// Mirror every atom to `−mark` with the same rate.
    pub symmetric: bool,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { amplitude: 0.5, atoms: vec![AtomSpec { mark: 1.0, rate: 1.0 }], symmetric: true }
    }
}

impl NoiseSection {
    pub fn jump_measure(&self) -> Result<LevyMeasureSpec, CliError> {
        let mut atoms: Vec<Atom> = self.atoms.iter().map(|a| Atom { mark: vec![a.mark], rate: a.rate }).collect();
        if self.symmetric {
            atoms.extend(self.atoms.iter().map(|a| Atom { mark: vec![-a.mark], rate: a.rate }));
        }
        LevyMeasureSpec::new(1, atoms).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Bounded multiplicative coefficients of size `scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearSection {
    pub scale: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub forcing: f64,
    pub noise: f64,
}

impl Default for NonlinearSection {
    fn default() -> Self {
        Self { scale: 0.2, beta1: 0.5, beta2: 0.25, forcing: 1.0, noise: 0.3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhiteNoiseDriverKind {
    Wiener,
    Jump,
}

/// White-noise parameters; `γ`, `α`, `p` and the grid come from `[solver]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhiteNoiseSection {
    pub r: f64,
    pub k_basis: usize,
    pub kernel_radius: Option<f64>,
    pub drivers: WhiteNoiseDriverKind,
    pub xi: Vec<Mode>,
    /// `h(u) = h_linear·u + h_offset`.
    pub h_linear: Vec<Mode>,
    pub h_offset: Vec<Mode>,
}

impl Default for WhiteNoiseSection {
    fn default() -> Self {
        Self {
            r: 1.0,
            k_basis: 8,
            kernel_radius: None,
            drivers: WhiteNoiseDriverKind::Wiener,
            xi: vec![Mode::constant(1.0)],
            h_linear: Vec::new(),
            h_offset: vec![Mode::constant(1.0)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub estimate_paths: usize,
    pub modes: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { estimate_paths: 200, modes: 32 }
    }
}
