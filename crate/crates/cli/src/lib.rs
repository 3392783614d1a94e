//! Configuration-driven experiment runner.
//!
//! A TOML file describes one [`Experiment`]; [`run`] builds the grid,
//! coefficients and drivers, validates every nested configuration before any
//! computation, dispatches the solves or checks, and writes CSV/JSON
//! artifacts plus a `manifest.json` with the SHA-256 of each file.
//!
//! Exit-code contract of the binary: `0` all hard assertions pass, `1` a
//! hard assertion failed, `2` invalid configuration, `3` Picard divergence.

use std::path::{Path, PathBuf};

use fracspde::integrator::IntegratorError;
use fracspde::levy::LevyError;
use fracspde::spectral::SpectralError;
use fracspde::verify::{InequalityReport, VerifyError};
use fracspde::whitenoise::WhiteNoiseError;
use thiserror::Error;

pub mod config;
mod experiments;
mod manifest;
mod sweep;

pub use config::{Experiment, ExperimentConfig};
pub use manifest::{Artifact, Artifacts, FloatEnvironment, Manifest, ReportEntry};
pub use sweep::{sweep, Axis, SweepFit, SweepOutcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("Picard iteration diverged; difference history {history:?}")]
    Divergence { history: Vec<f64> },
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Divergence { .. } => 3,
            Self::Runtime(_) | Self::Io { .. } => 1,
        }
    }
}

impl From<IntegratorError> for CliError {
    fn from(e: IntegratorError) -> Self {
        match e {
            IntegratorError::Config(m) | IntegratorError::Unsupported(m) => Self::Config(m),
            IntegratorError::Divergence { history } => Self::Divergence { history },
            IntegratorError::Levy(l) => l.into(),
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<LevyError> for CliError {
    fn from(e: LevyError) -> Self {
        match e {
            LevyError::Io(m) => Self::Runtime(m),
            other => Self::Config(other.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::InvalidGrid(_) => Self::Config(e.to_string()),
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Config(m) | VerifyError::Unsupported(m) => Self::Config(m),
            VerifyError::Integrator(i) => i.into(),
            VerifyError::Levy(l) => l.into(),
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<WhiteNoiseError> for CliError {
    fn from(e: WhiteNoiseError) -> Self {
        match e {
            WhiteNoiseError::Exponents(_) | WhiteNoiseError::Config(_) | WhiteNoiseError::Unsupported(_) => {
                Self::Config(e.to_string())
            }
            WhiteNoiseError::Integrator(i) => i.into(),
            WhiteNoiseError::Verify(v) => v.into(),
            other => Self::Runtime(other.to_string()),
        }
    }
}

/// Result of one [`run`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub reports: Vec<InequalityReport>,
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

/// Validates `cfg`, runs the experiment and writes its artifacts under
/// `output_dir/<experiment>/` with the manifest at `output_dir/manifest.json`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let mut artifacts = Artifacts::new(&cfg.output_dir);
    let prefix = PathBuf::from(cfg.experiment.name());
    let plan = experiments::prepare(cfg)?;
    artifacts.write(&prefix.join("config.toml"), cfg.to_toml().as_bytes())?;
    let reports = plan.execute(&mut artifacts, &prefix)?;
    write_reports(&reports, &mut artifacts, &prefix)?;
    let manifest = Manifest::new(cfg, &reports, artifacts);
    let manifest_path = manifest.write(&cfg.output_dir)?;
    Ok(RunOutcome { reports, manifest, manifest_path })
}

/// Loads a config file and runs it.
pub fn run_file(path: &Path) -> Result<RunOutcome, CliError> {
    run(&ExperimentConfig::load(path)?)
}

/// One JSON object per report plus the aggregate CSV.
fn write_reports(reports: &[InequalityReport], artifacts: &mut Artifacts, prefix: &Path) -> Result<(), CliError> {
    let mut seen = std::collections::HashMap::new();
    for r in reports {
        let n = seen.entry(r.name.clone()).or_insert(0usize);
        let file = if *n == 0 { format!("{}.json", r.name) } else { format!("{}_{}.json", r.name, n) };
        *n += 1;
        let json = r.to_json()?;
        artifacts.write(&prefix.join("reports").join(file), json.as_bytes())?;
    }
    let mut csv = Vec::new();
    fracspde::verify::write_reports_csv(reports, &mut csv)?;
    artifacts.write(&prefix.join("reports.csv"), &csv)
}
