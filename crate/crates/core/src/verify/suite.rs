//! The default battery of checks run by the `verify_suite` experiment.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    check_interpolation, check_kunita, check_lemma32, check_linear_estimate, check_littlewood_paley,
    check_multiplier_bounds, check_norm_equivalence, check_pointwise_multiplier, check_sup_estimate,
    merge_refinements, InequalityReport, KunitaParams, MultiplierParams, ParabolicParams, RefinementRule,
    VerifyError,
};
use crate::integrator::{Diffusivity, LinearProblem, SolverConfig, TimeField, TimeStack};
use crate::levy::{LevyMeasureSpec, LevyTriplet, StepIntegrand};
use crate::rng::substream;
use crate::spectral::{random_band_limited_with_cutoff, EtaIndex, Field, FieldStack, Grid};

/// Sizes of the default suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Paths for the jump-moment check.
    pub mc_paths: usize,
    /// Paths for the solver-based estimates.
    pub estimate_paths: usize,
    /// Base number of grid points.
    pub modes: usize,
    /// Refinement steps in each sweep.
    pub refinement_levels: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 7, mc_paths: 10_000, estimate_paths: 200, modes: 32, refinement_levels: 2 }
    }
}

fn two_mode(g: Grid) -> Field {
    Field::from_fn(g, |x| x[0].sin() + 0.4 * (3.0 * x[0]).cos()).unwrap()
}

/// Band limit of the random data; fixed so that a change of `modes` refines
/// the same continuum problem.
const DATA_BAND: f64 = 8.0;

fn littlewood_paley(cfg: &SuiteConfig) -> Result<InequalityReport, VerifyError> {
    let grid = Grid::periodic_1d(cfg.modes)?;
    let mut rng = substream(cfg.seed, 0, 1);
    let (a, b) = (random_band_limited_with_cutoff(grid, DATA_BAND, &mut rng), random_band_limited_with_cutoff(grid, DATA_BAND, &mut rng));
    let g = TimeStack::Function(Arc::new(move |t: f64| {
        FieldStack::new(vec![a.scaled(t.cos()), b.scaled(1.0 + t)]).expect("same grid")
    }));
    let mut levels = Vec::new();
    let mut dt = 0.1;
    for _ in 0..=cfg.refinement_levels {
        levels.push(check_littlewood_paley(&g, grid, &ParabolicParams::new(1.0, 3.0, 1.0, dt))?);
        dt /= 2.0;
    }
    Ok(merge_refinements(levels, RefinementRule::Drift(0.1)))
}

fn lemma32(cfg: &SuiteConfig) -> Result<InequalityReport, VerifyError> {
    let base = Grid::periodic_1d(cfg.modes / 2)?;
    let mut rng = substream(cfg.seed, 0, 2);
    let f0 = random_band_limited_with_cutoff(base, DATA_BAND / 2.0, &mut rng);
    let mut levels = Vec::new();
    let mut grid = base;
    for _ in 0..=cfg.refinement_levels {
        let f = TimeField::Constant(f0.resample(grid)?);
        levels.push(check_lemma32(&f, grid, 0.35, &ParabolicParams::new(1.0, 4.0, 0.5, 0.1))?);
        grid = grid.refined();
    }
    Ok(merge_refinements(levels, RefinementRule::Drift(0.15)))
}

fn kunita(cfg: &SuiteConfig, p: f64) -> Result<InequalityReport, VerifyError> {
    let spec = LevyMeasureSpec::symmetric(1.0, 0.5)?;
    let params = KunitaParams { p, horizon: 1.0, dt: 0.1, paths: cfg.mc_paths, seed: cfg.seed };
    let mut levels = Vec::new();
    for k in [4, 8] {
        let g: Vec<StepIntegrand> = (0..k).map(|_| StepIntegrand::constant(vec![0.5], 10, 0.1)).collect();
        let mut r = check_kunita(&g, &spec, &params)?;
        r.name = format!("kunita_p{p}");
        levels.push(r);
    }
    Ok(merge_refinements(levels, RefinementRule::Growth(2.0)))
}

fn linear_problem(grid: Grid, seed: u64) -> LinearProblem {
    let mut rng = substream(seed, 0, 3);
    let mut draw = || random_band_limited_with_cutoff(grid, DATA_BAND, &mut rng);
    let u0 = draw();
    let f = TimeField::Constant(draw());
    let h = TimeStack::Constant(FieldStack::new(vec![draw()]).expect("one component"));
    LinearProblem { u0, f, h, g: Vec::new(), a: Diffusivity::Constant(1.0) }
}

fn estimates(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>, VerifyError> {
    let grid = Grid::periodic_1d(cfg.modes)?;
    let wiener = [LevyTriplet::wiener()];
    let problem = linear_problem(grid, cfg.seed);
    let mut linear = Vec::new();
    let mut sup = Vec::new();
    let mut dt = 0.05;
    for _ in 0..2 {
        let mut solver = SolverConfig::new(1.0, 0.0, 2.0, 0.5, dt, grid);
        solver.seed = cfg.seed;
        linear.push(check_linear_estimate(&solver, &problem, &wiener, &[], cfg.estimate_paths)?);
        sup.push(check_sup_estimate(&solver, &problem, &wiener, &[], cfg.estimate_paths)?);
        dt /= 2.0;
    }
    Ok(vec![
        merge_refinements(linear, RefinementRule::Drift(0.25)),
        merge_refinements(sup, RefinementRule::Drift(0.15)),
    ])
}

/// Runs the default battery; every report is expected to pass.
pub fn run_default_suite(cfg: &SuiteConfig) -> Result<Vec<InequalityReport>, VerifyError> {
    if cfg.modes < 4 * DATA_BAND as usize || cfg.modes % 4 != 0 {
        return Err(VerifyError::Config(format!(
            "modes = {} must be a multiple of 4 and at least {} to resolve the random data",
            cfg.modes,
            4 * DATA_BAND as usize
        )));
    }
    let grid = Grid::periodic_1d(cfg.modes)?;
    let mut params = MultiplierParams::new(4.0, 50, cfg.seed);
    params.refinements = cfg.refinement_levels;
    let bump = Field::from_fn(grid, |x| (-4.0 * (x[0] - 3.0).powi(2)).exp())?;

    let mut reports = vec![littlewood_paley(cfg)?, lemma32(cfg)?, kunita(cfg, 2.0)?, kunita(cfg, 4.0)?];
    reports.extend(estimates(cfg)?);
    reports.push(check_interpolation(&two_mode(grid), 0.0, 1.0, 0.5, 2.0)?);
    reports.push(check_multiplier_bounds(EtaIndex::One, 1.0, grid, &params)?);
    reports.push(check_multiplier_bounds(EtaIndex::Three, 1.0, grid, &MultiplierParams { p: 2.0, ..params.clone() })?);
    reports.push(check_norm_equivalence(1.0, grid, &MultiplierParams { p: 3.0, ..params })?);
    reports.push(check_pointwise_multiplier(&bump, &two_mode(grid), 0.0, 3.0)?);
    Ok(reports)
}
