//! Exponential-Euler marching in Fourier space.
//!
//! Over a step `(t_n, t_{n+1}]` with frozen diffusivity `a_n` the scheme is
//!
//! ```text
//! û_{n+1} = E_n (û_n + Σ_k ĥ^k(t_n) ΔW^k_n) + Φ_n f̂(t_n)
//!         + Σ_{jumps τ of driver k} e^{-a_n (t_{n+1}-τ)|ξ|^α} Σ_j ĝ^{k,j}(t_n) z^j
//!         − Φ_n Σ_k Σ_j ĝ^{k,j}(t_n) μ^{k,j}
//! ```
//!
//! with `E_n = e^{-a_n dt |ξ|^α}` and `Φ_n = (1 − E_n)/(a_n |ξ|^α)` (limit `dt`
//! at `ξ = 0`), `μ^k` the compensator rate of driver `k`.

use std::ops::Range;

use rustfft::num_complex::Complex64;

use super::{Diffusivity, IntegratorError, SolutionPath, SolverConfig, TimeField, TimeStack};
use crate::levy::{sample_driver, DriverPath, LevyTriplet, STEP_TOLERANCE};
use crate::spectral::{Field, FieldStack, Grid};

/// Linear data `(u₀, f, h, g, a)`; `g[j]` holds the `K` components that
/// multiply mark coordinate `j`.
#[derive(Clone, Debug)]
pub struct LinearProblem {
    pub u0: Field,
    pub f: TimeField,
    pub h: TimeStack,
    pub g: Vec<TimeStack>,
    pub a: Diffusivity,
}

impl LinearProblem {
    pub fn deterministic(u0: Field, f: TimeField, a: Diffusivity) -> Self {
        Self { u0, f, h: TimeStack::Zero, g: Vec::new(), a }
    }
}

/// Driver paths for one Monte Carlo sample.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathDrivers {
    pub path_index: u64,
    /// One Gaussian driver per `h^k`.
    pub wiener: Vec<DriverPath>,
    /// One compensated pure-jump driver per `g^{k,·}`.
    pub jumps: Vec<DriverPath>,
}

impl PathDrivers {
    /// Samples all drivers of path `path`; Wiener driver `k` uses substream
    /// `k`, jump driver `k` uses substream `K_w + k`.
    pub fn sample(
        cfg: &SolverConfig,
        wiener: &[LevyTriplet],
        jumps: &[LevyTriplet],
        path: u64,
    ) -> Result<Self, IntegratorError> {
        let w = wiener
            .iter()
            .enumerate()
            .map(|(k, t)| sample_driver(t, cfg.horizon, cfg.dt, cfg.seed, path, k as u64))
            .collect::<Result<Vec<_>, _>>()?;
        let offset = wiener.len() as u64;
        let j = jumps
            .iter()
            .enumerate()
            .map(|(k, t)| sample_driver(t, cfg.horizon, cfg.dt, cfg.seed, path, offset + k as u64))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { path_index: path, wiener: w, jumps: j })
    }

    pub fn is_empty(&self) -> bool {
        self.wiener.is_empty() && self.jumps.is_empty()
    }
}

/// `|ξ|^α` per coefficient with the origin set to zero.
pub(crate) fn symbol_powers(grid: &Grid, alpha: f64) -> Vec<f64> {
    grid.frequency_magnitudes()
        .into_iter()
        .map(|r| if r == 0.0 { 0.0 } else { r.powf(alpha) })
        .collect()
}

struct StepOperators {
    a: f64,
    decay: Vec<f64>,
    phi: Vec<f64>,
}

impl StepOperators {
    fn new(powers: &[f64], a: f64, dt: f64) -> Self {
        let decay: Vec<f64> = powers.iter().map(|&m| (-a * dt * m).exp()).collect();
        let phi = powers
            .iter()
            .map(|&m| {
                let x = a * dt * m;
                // (1 - e^{-x}) / (a m) = dt (1 - e^{-x}) / x, stable for small x
                if x < 1e-8 {
                    dt * (1.0 - 0.5 * x)
                } else {
                    -dt * (-x).exp_m1() / x
                }
            })
            .collect();
        Self { a, decay, phi }
    }
}

/// Spectral view of a time field with the constant case cached.
enum SpectralSource<'a> {
    Zero,
    Constant(Vec<Complex64>),
    Dynamic(&'a TimeField),
}

impl<'a> SpectralSource<'a> {
    fn new(f: &'a TimeField) -> Self {
        match f {
            TimeField::Zero => Self::Zero,
            TimeField::Constant(field) if field.is_zero() => Self::Zero,
            TimeField::Constant(field) => Self::Constant(field.to_spectral().into_coeffs()),
            other => Self::Dynamic(other),
        }
    }

    fn at(&self, n: usize, t: f64, grid: &Grid) -> Result<Option<Vec<Complex64>>, IntegratorError> {
        Ok(match self {
            Self::Zero => None,
            Self::Constant(c) => Some(c.clone()),
            Self::Dynamic(f) => match f.at(n, t) {
                None => None,
                Some(field) => {
                    check_grid(field.grid(), grid)?;
                    Some(field.to_spectral().into_coeffs())
                }
            },
        })
    }
}

enum StackSource<'a> {
    Zero,
    Constant(Vec<Vec<Complex64>>),
    Dynamic(&'a TimeStack),
}

impl<'a> StackSource<'a> {
    fn new(s: &'a TimeStack) -> Self {
        match s {
            TimeStack::Zero => Self::Zero,
            TimeStack::Constant(stack) if stack.is_zero() => Self::Zero,
            TimeStack::Constant(stack) => Self::Constant(stack_spectra(stack)),
            other => Self::Dynamic(other),
        }
    }

    fn at(&self, n: usize, t: f64, grid: &Grid, count: usize) -> Result<Option<Vec<Vec<Complex64>>>, IntegratorError> {
        let out = match self {
            Self::Zero => return Ok(None),
            Self::Constant(c) => c.clone(),
            Self::Dynamic(s) => match s.at(n, t) {
                None => return Ok(None),
                Some(stack) => {
                    check_grid(stack.grid(), grid)?;
                    stack_spectra(&stack)
                }
            },
        };
        if out.len() != count {
            return Err(IntegratorError::Config(format!(
                "noise coefficient has {} components but {count} drivers were supplied",
                out.len()
            )));
        }
        Ok(Some(out))
    }
}

fn stack_spectra(stack: &FieldStack) -> Vec<Vec<Complex64>> {
    stack.components().iter().map(|c| c.to_spectral().into_coeffs()).collect()
}

fn check_grid(found: &Grid, expected: &Grid) -> Result<(), IntegratorError> {
    if found != expected {
        return Err(IntegratorError::Config("data field lives on a different grid than the solver".into()));
    }
    Ok(())
}

fn check_path(path: &DriverPath, cfg: &SolverConfig) -> Result<(), IntegratorError> {
    if path.steps != cfg.steps() || (path.dt - cfg.dt).abs() > STEP_TOLERANCE * cfg.dt {
        return Err(IntegratorError::Config(format!(
            "driver path has {} steps of {}, solver expects {} steps of {}",
            path.steps,
            path.dt,
            cfg.steps(),
            cfg.dt
        )));
    }
    Ok(())
}

/// Validates the pairing between data and drivers.
pub(crate) fn check_drivers(
    problem: &LinearProblem,
    drivers: &PathDrivers,
    cfg: &SolverConfig,
) -> Result<(), IntegratorError> {
    for w in &drivers.wiener {
        check_path(w, cfg)?;
        if !w.jumps.is_empty() {
            return Err(IntegratorError::Unsupported(
                "Wiener driver carries jump events; pass it as a jump driver instead".into(),
            ));
        }
        if w.dim != 1 {
            return Err(IntegratorError::Config("Wiener drivers must be one-dimensional".into()));
        }
    }
    if !problem.h.is_zero() && drivers.wiener.is_empty() {
        return Err(IntegratorError::Config("Wiener coefficient h supplied without Wiener drivers".into()));
    }
    for j in &drivers.jumps {
        check_path(j, cfg)?;
        if !j.recentred {
            return Err(IntegratorError::NotRecentred);
        }
        if j.has_gaussian {
            return Err(IntegratorError::Unsupported(
                "jump driver has a Gaussian part; pass that part as a Wiener driver".into(),
            ));
        }
        if j.dim != problem.g.len() {
            return Err(IntegratorError::Config(format!(
                "jump driver marks have dimension {}, but g has {} mark components",
                j.dim,
                problem.g.len()
            )));
        }
    }
    if problem.g.iter().any(|g| !g.is_zero()) && drivers.jumps.is_empty() {
        return Err(IntegratorError::Config("jump coefficient g supplied without jump drivers".into()));
    }
    Ok(())
}

/// Marches steps `range` starting from `start` (the state at `t_{range.start}`).
/// Returns the states at `t_{range.start + 1}, …, t_{range.end}`.
pub(crate) fn march(
    cfg: &SolverConfig,
    problem: &LinearProblem,
    drivers: &PathDrivers,
    range: Range<usize>,
    start: &Field,
) -> Result<Vec<Field>, IntegratorError> {
    let grid = cfg.grid;
    check_grid(start.grid(), &grid)?;
    let powers = symbol_powers(&grid, cfg.alpha);
    let f_src = SpectralSource::new(&problem.f);
    let h_src = StackSource::new(&problem.h);
    let g_src: Vec<StackSource> = problem.g.iter().map(StackSource::new).collect();
    let any_g = g_src.iter().any(|s| !matches!(s, StackSource::Zero));
    let k_wiener = drivers.wiener.len();
    let k_jump = drivers.jumps.len();
    let jumps_by_step: Vec<Vec<Vec<&crate::levy::JumpEvent>>> =
        drivers.jumps.iter().map(|p| p.jumps_by_step()).collect();

    let mut ops: Option<StepOperators> = None;
    let mut state = start.to_spectral().into_coeffs();
    let mut out = Vec::with_capacity(range.len());
    for n in range {
        let t = n as f64 * cfg.dt;
        let t_next = (n + 1) as f64 * cfg.dt;
        let a = problem.a.at(n, t);
        if !(a > 0.0 && a.is_finite()) {
            return Err(IntegratorError::Config(format!("diffusivity {a} at t = {t} is not positive")));
        }
        if ops.as_ref().is_none_or(|o| o.a != a) {
            ops = Some(StepOperators::new(&powers, a, cfg.dt));
        }
        let op = ops.as_ref().expect("operators set above");

        if k_wiener > 0 {
            if let Some(h) = h_src.at(n, t, &grid, k_wiener)? {
                for (hk, path) in h.iter().zip(&drivers.wiener) {
                    let dw = path.wiener[n][0];
                    state.iter_mut().zip(hk).for_each(|(s, c)| *s += c * dw);
                }
            }
        }
        state.iter_mut().zip(&op.decay).for_each(|(s, e)| *s *= e);
        if let Some(f) = f_src.at(n, t, &grid)? {
            state.iter_mut().zip(f.iter().zip(&op.phi)).for_each(|(s, (c, p))| *s += c * p);
        }
        if any_g && k_jump > 0 {
            let g: Vec<Option<Vec<Vec<Complex64>>>> =
                g_src.iter().map(|s| s.at(n, t, &grid, k_jump)).collect::<Result<_, _>>()?;
            for (k, path) in drivers.jumps.iter().enumerate() {
                // compensator: −Φ Σ_j ĝ^{k,j} μ^{k,j}
                for (j, gj) in g.iter().enumerate() {
                    if let Some(gj) = gj {
                        let mu = path.jump_mean[j];
                        if mu != 0.0 {
                            state
                                .iter_mut()
                                .zip(gj[k].iter().zip(&op.phi))
                                .for_each(|(s, (c, p))| *s -= c * (p * mu));
                        }
                    }
                }
                for event in &jumps_by_step[k][n] {
                    let lag = t_next - event.time;
                    let mut kick = vec![Complex64::new(0.0, 0.0); grid.len()];
                    for (j, gj) in g.iter().enumerate() {
                        if let Some(gj) = gj {
                            let z = event.mark[j];
                            kick.iter_mut().zip(&gj[k]).for_each(|(q, c)| *q += c * z);
                        }
                    }
                    state
                        .iter_mut()
                        .zip(kick.iter().zip(&powers))
                        .for_each(|(s, (q, &m))| *s += q * (-a * lag * m).exp());
                }
            }
        }
        out.push(Field::new(grid, grid.inverse(&state))?);
    }
    Ok(out)
}

fn run(
    cfg: &SolverConfig,
    problem: &LinearProblem,
    drivers: &PathDrivers,
) -> Result<SolutionPath, IntegratorError> {
    cfg.validate()?;
    check_drivers(problem, drivers, cfg)?;
    let mut states = Vec::with_capacity(cfg.steps() + 1);
    states.push(problem.u0.clone());
    states.extend(march(cfg, problem, drivers, 0..cfg.steps(), &problem.u0)?);
    SolutionPath::new(cfg, states)
}

/// `u' = a(t) Δ^{α/2} u + f`, `u(0) = u₀`.
pub fn solve_deterministic(
    u0: &Field,
    f: &TimeField,
    a: &Diffusivity,
    cfg: &SolverConfig,
) -> Result<SolutionPath, IntegratorError> {
    run(cfg, &LinearProblem::deterministic(u0.clone(), f.clone(), a.clone()), &PathDrivers::default())
}

/// `Σ_k ∫_0^t T_{t-s} g^k(s) dW^k_s` with `a ≡ 1`.
pub fn stochastic_convolution_wiener(
    g: &TimeStack,
    paths: &[DriverPath],
    cfg: &SolverConfig,
) -> Result<SolutionPath, IntegratorError> {
    let problem = LinearProblem {
        u0: Field::zeros(cfg.grid),
        f: TimeField::Zero,
        h: g.clone(),
        g: Vec::new(),
        a: Diffusivity::Constant(1.0),
    };
    let drivers = PathDrivers { path_index: paths.first().map_or(0, |p| p.path_index), wiener: paths.to_vec(), jumps: Vec::new() };
    run(cfg, &problem, &drivers)
}

/// `Σ_k ∫_0^t T_{t-s} g^k(s) · dY^k_s` with `a ≡ 1`; `g[j]` multiplies mark
/// coordinate `j`.
pub fn stochastic_convolution_jump(
    g: &[TimeStack],
    paths: &[DriverPath],
    cfg: &SolverConfig,
) -> Result<SolutionPath, IntegratorError> {
    let problem = LinearProblem {
        u0: Field::zeros(cfg.grid),
        f: TimeField::Zero,
        h: TimeStack::Zero,
        g: g.to_vec(),
        a: Diffusivity::Constant(1.0),
    };
    let drivers = PathDrivers { path_index: paths.first().map_or(0, |p| p.path_index), wiener: Vec::new(), jumps: paths.to_vec() };
    run(cfg, &problem, &drivers)
}

/// Full linear equation with Wiener and jump noise.
pub fn solve_linear(
    problem: &LinearProblem,
    drivers: &PathDrivers,
    cfg: &SolverConfig,
) -> Result<SolutionPath, IntegratorError> {
    run(cfg, problem, drivers)
}
