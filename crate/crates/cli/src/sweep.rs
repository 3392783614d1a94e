//! Reruns an experiment with one parameter scaled and aggregates the reports.

use std::path::PathBuf;

use fracspde::verify::{merge_refinements, write_reports_csv, InequalityReport, RefinementRule};
use serde::{Deserialize, Serialize};

use crate::experiments::default_paths;
use crate::{run, Artifacts, CliError, Experiment, ExperimentConfig, Manifest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Axis {
    #[value(name = "dt")]
    Dt,
    #[value(name = "grid")]
    Grid,
    #[value(name = "K", alias = "k")]
    K,
    #[value(name = "K_basis", alias = "k_basis")]
    KBasis,
    #[value(name = "mc_paths")]
    McPaths,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dt => "dt",
            Self::Grid => "grid",
            Self::K => "K",
            Self::KBasis => "K_basis",
            Self::McPaths => "mc_paths",
        }
    }

    fn valid_for(self, e: Experiment) -> bool {
        use Experiment::*;
        match self {
            Self::Dt => e != VerifySuite,
            Self::Grid => true,
            Self::K => matches!(e, LinearWiener | LinearLevy | NonlinearPicard),
            Self::KBasis => e == Whitenoise,
            Self::McPaths => e != Deterministic,
        }
    }

    /// `cfg` with this axis scaled by `factor`, and the resulting parameter value.
    fn scaled(self, cfg: &ExperimentConfig, factor: f64) -> Result<(ExperimentConfig, f64), CliError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(CliError::Config(format!("sweep factor {factor} must be positive and finite")));
        }
        let count = |v: usize| -> Result<usize, CliError> {
            let n = (v as f64 * factor).round();
            if n < 1.0 {
                return Err(CliError::Config(format!("{} × {factor} rounds below 1", self.name())));
            }
            Ok(n as usize)
        };
        let mut c = cfg.clone();
        let value = match self {
            Self::Dt => {
                c.solver.dt *= factor;
                c.solver.dt
            }
            Self::Grid if c.experiment == Experiment::VerifySuite => {
                c.verify.modes = count(c.verify.modes)?;
                c.verify.modes as f64
            }
            Self::Grid => {
                c.solver.modes = count(c.solver.modes)?;
                c.solver.modes as f64
            }
            Self::K => {
                c.solver.drivers = count(c.solver.drivers)?;
                c.solver.drivers as f64
            }
            Self::KBasis => {
                c.whitenoise.k_basis = count(c.whitenoise.k_basis)?;
                c.whitenoise.k_basis as f64
            }
            Self::McPaths => {
                let base = c.mc_paths.or(default_paths(c.experiment)).expect("axis validated");
                let n = count(base)?;
                c.mc_paths = Some(n);
                n as f64
            }
        };
        Ok((c, value))
    }
}

/// Per-report series across the sweep and log-log slopes against the parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    pub name: String,
    pub parameters: Vec<f64>,
    pub lhs: Vec<f64>,
    pub ratio: Vec<f64>,
    pub mc_std_error: Vec<f64>,
    pub lhs_slope: Option<f64>,
    pub ratio_slope: Option<f64>,
    pub std_error_slope: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub axis: Axis,
    pub factors: Vec<f64>,
    pub parameters: Vec<f64>,
    /// Reports of the first level with the ratio series of all levels.
    pub reports: Vec<InequalityReport>,
    pub fits: Vec<SweepFit>,
    #[serde(skip)]
    pub manifest_path: PathBuf,
}

impl SweepOutcome {
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

    pub fn fit(&self, name: &str) -> Option<&SweepFit> {
        self.fits.iter().find(|f| f.name == name)
    }
}

/// Least-squares slope of `ln y` on `ln x`; `None` unless every value is positive
/// and at least two distinct `x` occur.
fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).unzip();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / sxx)
}

/// Runs `cfg` once per factor under `output_dir/sweep-<axis>/level-<i>/`.
/// With `max_drift`, each merged report also requires consecutive ratios to
/// stay within that relative drift.
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: Axis,
    factors: &[f64],
    max_drift: Option<f64>,
) -> Result<SweepOutcome, CliError> {
    if !axis.valid_for(cfg.experiment) {
        return Err(CliError::Config(format!(
            "axis {} is not valid for experiment {}",
            axis.name(),
            cfg.experiment
        )));
    }
    if factors.is_empty() {
        return Err(CliError::Config("at least one sweep factor is required".into()));
    }
    let base = cfg.output_dir.join(format!("sweep-{}", axis.name()));
    // validate every level before running any
    let levels = factors
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let (mut c, value) = axis.scaled(cfg, *f)?;
            c.output_dir = base.join(format!("level-{i}"));
            crate::experiments::prepare(&c)?;
            Ok((c, value))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut artifacts = Artifacts::new(&base);
    let mut parameters = Vec::new();
    let mut per_level: Vec<Vec<InequalityReport>> = Vec::new();
    for (i, (c, value)) in levels.iter().enumerate() {
        let outcome = run(c)?;
        let rel = PathBuf::from(format!("level-{i}"));
        artifacts.absorb(&rel, &Artifacts::from_manifest(&c.output_dir, &outcome.manifest));
        artifacts.adopt(&rel.join("manifest.json"), &outcome.manifest_path)?;
        parameters.push(*value);
        per_level.push(outcome.reports);
    }
    let count = per_level[0].len();
    if per_level.iter().any(|l| l.len() != count) {
        return Err(CliError::Runtime("sweep levels produced different report sets".into()));
    }
    let rule = max_drift.map_or(RefinementRule::Growth(f64::INFINITY), RefinementRule::Drift);
    let mut reports = Vec::with_capacity(count);
    let mut fits = Vec::with_capacity(count);
    for j in 0..count {
        let column: Vec<InequalityReport> = per_level.iter().map(|l| l[j].clone()).collect();
        let pick = |f: fn(&InequalityReport) -> f64| column.iter().map(f).collect::<Vec<f64>>();
        let (lhs, ratio, se) = (pick(|r| r.lhs), pick(|r| r.ratio), pick(|r| r.mc_std_error));
        fits.push(SweepFit {
            name: column[0].name.clone(),
            lhs_slope: log_log_slope(&parameters, &lhs),
            ratio_slope: log_log_slope(&parameters, &ratio),
            std_error_slope: log_log_slope(&parameters, &se),
            parameters: parameters.clone(),
            lhs,
            ratio,
            mc_std_error: se,
        });
        reports.push(merge_refinements(column, rule));
    }

    let mut rows = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Runtime(e.to_string());
    rows.write_record(["name", "level", "factor", "parameter", "lhs", "rhs", "ratio", "mc_std_error", "pass"])
        .map_err(csv_err)?;
    for (i, level) in per_level.iter().enumerate() {
        for r in level {
            rows.write_record([
                r.name.clone(),
                i.to_string(),
                factors[i].to_string(),
                parameters[i].to_string(),
                r.lhs.to_string(),
                r.rhs.to_string(),
                r.ratio.to_string(),
                r.mc_std_error.to_string(),
                r.pass.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    artifacts.write("sweep.csv".as_ref(), &rows.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?)?;
    let mut merged_csv = Vec::new();
    write_reports_csv(&reports, &mut merged_csv)?;
    artifacts.write("reports.csv".as_ref(), &merged_csv)?;

    let mut outcome =
        SweepOutcome { axis, factors: factors.to_vec(), parameters, reports, fits, manifest_path: PathBuf::new() };
    let json = serde_json::to_string_pretty(&outcome).map_err(|e| CliError::Runtime(e.to_string()))?;
    artifacts.write("sweep.json".as_ref(), json.as_bytes())?;
    let manifest = Manifest::new(cfg, &outcome.reports, artifacts);
    outcome.manifest_path = manifest.write(&base)?;
    Ok(outcome)
}
