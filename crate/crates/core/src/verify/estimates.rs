//! A-priori bounds for the linear equation: the full `𝓗^{γ+α}_p` estimate
//! and the sup-in-time bound, both as Monte Carlo ratios.

use serde::{Deserialize, Serialize};

use super::{mean_and_std_error, ConfigDigest, InequalityReport, VerifyError};
use crate::integrator::{solve_linear, Diffusivity, LinearProblem, PathDrivers, SolutionPath, SolverConfig, TimeStack};
use crate::levy::LevyTriplet;
use crate::spectral::{ell2_sobolev_norm, frac_power, sobolev_norm, Field};

/// Norms of the linear data `(f, h, g, u₀)` entering the right-hand sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataNorms {
    /// `‖f‖_{𝔥^γ_p(T)}`
    pub f: f64,
    /// `‖h‖_{𝔥^{γ+α/2}_p(T,ℓ₂)}`
    pub h: f64,
    /// `‖g^{·,j}‖_{𝔥^{γ+α/2+shift}_p(T,ℓ₂)}` per mark coordinate `j`.
    pub g: Vec<f64>,
    /// `‖u₀‖_{H^{γ+α−α/p}_p}`
    pub u0: f64,
}

impl DataNorms {
    pub fn total(&self) -> f64 {
        self.f + self.h + self.g.iter().sum::<f64>() + self.u0
    }
}

/// The pieces of the discrete `𝓗^{γ+α}_p(T)` norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HNormParts {
    /// `‖u‖_{𝔥^{γ+α}_p(T)}`
    pub u: f64,
    /// `‖𝔻u‖_{𝔥^γ_p(T)}` with `𝔻u = aΔ^{α/2}u + f`.
    pub du: f64,
    /// Noise coefficients and initial value, as in [`DataNorms`] with no shift.
    pub data: DataNorms,
}

impl HNormParts {
    pub fn total(&self) -> f64 {
        self.u + self.du + self.data.total()
    }
}

/// `(Σ_n dt ‖X_n‖^p)^{1/p}` over the steps `0..N` of a time stack.
fn stack_norm(s: &TimeStack, order: f64, cfg: &SolverConfig) -> Result<f64, VerifyError> {
    let mut total = 0.0;
    for n in 0..cfg.steps() {
        if let Some(v) = s.at(n, n as f64 * cfg.dt) {
            total += cfg.dt * ell2_sobolev_norm(&v, order, cfg.p)?.powf(cfg.p);
        }
    }
    Ok(total.powf(1.0 / cfg.p))
}

/// Data norms with the jump coefficients measured `g_shift` above `γ + α/2`.
pub fn data_norms(problem: &LinearProblem, g_shift: f64, cfg: &SolverConfig) -> Result<DataNorms, VerifyError> {
    let (gamma, alpha, p) = (cfg.gamma, cfg.alpha, cfg.p);
    let mut f = 0.0;
    for n in 0..cfg.steps() {
        if let Some(v) = problem.f.at(n, n as f64 * cfg.dt) {
            f += cfg.dt * sobolev_norm(&v, gamma, p)?.powf(p);
        }
    }
    Ok(DataNorms {
        f: f.powf(1.0 / p),
        h: stack_norm(&problem.h, gamma + alpha / 2.0, cfg)?,
        g: problem.g.iter().map(|g| stack_norm(g, gamma + alpha / 2.0 + g_shift, cfg)).collect::<Result<_, _>>()?,
        u0: sobolev_norm(&problem.u0, gamma + alpha - alpha / p, p)?,
    })
}

/// `Σ_n dt ‖u_n‖^p_{H^{γ+α}_p}` and `Σ_n dt ‖𝔻u_n‖^p_{H^γ_p}` for one path,
/// left endpoints `n = 0..N−1`.
fn path_sums(
    sol: &SolutionPath,
    problem: &LinearProblem,
    a: &Diffusivity,
    cfg: &SolverConfig,
) -> Result<(f64, f64), VerifyError> {
    let (mut u_sum, mut du_sum) = (0.0, 0.0);
    for (n, u) in sol.states().iter().take(cfg.steps()).enumerate() {
        let t = n as f64 * cfg.dt;
        u_sum += cfg.dt * sobolev_norm(u, cfg.gamma + cfg.alpha, cfg.p)?.powf(cfg.p);
        let mut du = frac_power(u, cfg.alpha)?.scaled(a.at(n, t));
        if let Some(f) = problem.f.at(n, t) {
            du = du.add(&f)?;
        }
        du_sum += cfg.dt * sobolev_norm(&du, cfg.gamma, cfg.p)?.powf(cfg.p);
    }
    Ok((u_sum, du_sum))
}

/// Discrete `𝓗^{γ+α}_p(T)` norm of an ensemble of solutions of `problem`,
/// each given with the diffusivity it was solved with.
pub fn discrete_h_norm(
    solutions: &[(SolutionPath, Diffusivity)],
    problem: &LinearProblem,
    cfg: &SolverConfig,
) -> Result<HNormParts, VerifyError> {
    let m = solutions.len() as f64;
    let (mut u, mut du) = (0.0, 0.0);
    for (sol, a) in solutions {
        let (us, ds) = path_sums(sol, problem, a, cfg)?;
        u += us / m;
        du += ds / m;
    }
    Ok(HNormParts { u: u.powf(1.0 / cfg.p), du: du.powf(1.0 / cfg.p), data: data_norms(problem, 0.0, cfg)? })
}

struct Ensemble {
    solutions: Vec<(SolutionPath, Diffusivity)>,
    digest: String,
}

fn solve_ensemble(
    check: &str,
    cfg: &SolverConfig,
    problem: &LinearProblem,
    wiener: &[LevyTriplet],
    jumps: &[LevyTriplet],
    paths: usize,
) -> Result<Ensemble, VerifyError> {
    if paths == 0 {
        return Err(VerifyError::Config("need at least one Monte Carlo path".into()));
    }
    let steps = cfg.steps();
    let mut digest = ConfigDigest::new(check, &(cfg, paths, wiener, jumps))?;
    digest.field(&problem.u0).time_field(&problem.f, steps, cfg.dt).time_stack(&problem.h, steps, cfg.dt);
    for g in &problem.g {
        digest.time_stack(g, steps, cfg.dt);
    }
    let mut solutions = Vec::with_capacity(paths);
    for path in 0..paths as u64 {
        let drivers = PathDrivers::sample(cfg, wiener, jumps, path)?;
        let a = problem.a.resolve(cfg, path);
        let nodes: Vec<f64> = (0..=steps).map(|n| a.at(n, n as f64 * cfg.dt)).collect();
        digest.values(&nodes);
        let sol = solve_linear(&LinearProblem { a: a.clone(), ..problem.clone() }, &drivers, cfg)?;
        solutions.push((sol, a));
    }
    Ok(Ensemble { solutions, digest: digest.finish() })
}

/// Linear a-priori estimate: `‖u‖_{𝓗^{γ+α}_p(T)}` (Monte Carlo) against
/// `‖f‖_{𝔥^γ} + ‖h‖_{𝔥^{γ+α/2}} + Σ_j ‖g^{·,j}‖_{𝔥^{γ+α/2+ε₁}} + ‖u₀‖_{U^{γ+α−α/p}}`.
/// The standard error is that of the per-path norms.
pub fn check_linear_estimate(
    cfg: &SolverConfig,
    problem: &LinearProblem,
    wiener: &[LevyTriplet],
    jumps: &[LevyTriplet],
    paths: usize,
) -> Result<InequalityReport, VerifyError> {
    cfg.validate()?;
    let ens = solve_ensemble("linear_estimate", cfg, problem, wiener, jumps, paths)?;
    let lhs = discrete_h_norm(&ens.solutions, problem, cfg)?.total();
    let rhs = data_norms(problem, cfg.eps1, cfg)?.total();
    let data = data_norms(problem, 0.0, cfg)?.total();
    let per_path = ens
        .solutions
        .iter()
        .map(|(sol, a)| {
            let (u, du) = path_sums(sol, problem, a, cfg)?;
            Ok(u.powf(1.0 / cfg.p) + du.powf(1.0 / cfg.p) + data)
        })
        .collect::<Result<Vec<f64>, VerifyError>>()?;
    let (_, se) = mean_and_std_error(&per_path);
    Ok(InequalityReport::new("linear_estimate", lhs, rhs, ens.digest).with_mc(paths, se))
}

/// Sup-in-time bound: `E sup_n ‖u(t_n)‖^p_{H^γ_p}` against
/// `‖𝔻u‖^p_{𝔥^γ} + ‖h‖^p_{𝔥^γ(ℓ₂)} + Σ_j ‖g^{·,j}‖^p_{𝔥^γ(ℓ₂)} + ‖u₀‖^p_{H^γ_p}`.
pub fn check_sup_estimate(
    cfg: &SolverConfig,
    problem: &LinearProblem,
    wiener: &[LevyTriplet],
    jumps: &[LevyTriplet],
    paths: usize,
) -> Result<InequalityReport, VerifyError> {
    cfg.validate()?;
    let ens = solve_ensemble("sup_estimate", cfg, problem, wiener, jumps, paths)?;
    let p = cfg.p;
    let sups = ens
        .solutions
        .iter()
        .map(|(sol, _)| {
            sol.states()
                .iter()
                .map(|u| Ok(sobolev_norm(u, cfg.gamma, p)?.powf(p)))
                .try_fold(0.0f64, |m, v: Result<f64, VerifyError>| Ok(m.max(v?)))
        })
        .collect::<Result<Vec<f64>, VerifyError>>()?;
    let (lhs, se) = mean_and_std_error(&sups);

    let m = ens.solutions.len() as f64;
    let mut du = 0.0;
    for (sol, a) in &ens.solutions {
        du += path_sums(sol, problem, a, cfg)?.1 / m;
    }
    let h = stack_norm(&problem.h, cfg.gamma, cfg)?.powf(p);
    let g: f64 = problem.g.iter().map(|g| Ok(stack_norm(g, cfg.gamma, cfg)?.powf(p))).sum::<Result<f64, VerifyError>>()?;
    let u0 = sobolev_norm(&problem.u0, cfg.gamma, p)?.powf(p);
    let rhs = du + h + g + u0;
    Ok(InequalityReport::new("sup_estimate", lhs, rhs, ens.digest).with_mc(paths, se))
}

/// Deterministic comparison bound `‖u₀‖_{H^γ_p} + Σ_n dt ‖f_n‖_{H^γ_p}` for
/// `sup_t ‖u(t)‖_{H^γ_p}` when there is no noise and `a` is constant
/// (the semigroup is an `L_2` contraction on the grid).
pub fn deterministic_sup_bound(u0: &Field, problem: &LinearProblem, cfg: &SolverConfig) -> Result<f64, VerifyError> {
    let mut bound = sobolev_norm(u0, cfg.gamma, cfg.p)?;
    for n in 0..cfg.steps() {
        if let Some(f) = problem.f.at(n, n as f64 * cfg.dt) {
            bound += cfg.dt * sobolev_norm(&f, cfg.gamma, cfg.p)?;
        }
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::TimeField;
    use crate::spectral::Grid;

    #[test]
    fn zero_data_is_zero() {
        let cfg = SolverConfig::new(1.0, 0.0, 2.0, 0.2, 0.05, Grid::periodic_1d(16).unwrap());
        let problem = LinearProblem::deterministic(Field::zeros(cfg.grid), TimeField::Zero, Diffusivity::Constant(1.0));
        let r = check_linear_estimate(&cfg, &problem, &[], &[], 2).unwrap();
        assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 0.0, 0.0));
        let r = check_sup_estimate(&cfg, &problem, &[], &[], 2).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }

    #[test]
    fn shifted_norm_dominates_for_smooth_data() {
        let cfg = SolverConfig::new(1.0, 0.0, 4.0, 0.2, 0.05, Grid::periodic_1d(16).unwrap());
        let g = TimeStack::Constant(
            crate::spectral::FieldStack::new(vec![Field::from_fn(cfg.grid, |x| (3.0 * x[0]).sin()).unwrap()]).unwrap(),
        );
        let problem = LinearProblem { g: vec![g], ..LinearProblem::deterministic(Field::zeros(cfg.grid), TimeField::Zero, Diffusivity::Constant(1.0)) };
        let plain = data_norms(&problem, 0.0, &cfg).unwrap();
        let shifted = data_norms(&problem, cfg.eps1, &cfg).unwrap();
        assert!(shifted.g[0] > plain.g[0]);
        assert_eq!(shifted.f, 0.0);
    }
}
