use super::engine::{check_drivers, march};
use super::{
    Diffusivity, IntegratorError, LinearProblem, PathDrivers, SolutionPath, SolverConfig, TimeField, TimeStack,
};
use crate::spectral::{frac_power, partial_derivative, sobolev_norm, Field, FieldStack};

/// Structural coefficients of the semilinear equation
///
/// ```text
/// f(u)       = b Δ^{β₁/2}u + Σ_i c^i u_{x^i} 1_{α>1} + d u + f₀
/// h^k(u)     = η^k Δ^{β₂/2}u + l^k u + h₀^k
/// g^{k,j}(u) = σ^{k,j} Δ^{β₃^j/2}u + ν^{k,j} u + g₀^{k,j}
/// ```
///
/// Vectors indexed by `j` run over mark coordinates; stacks hold the `K`
/// drivers.
#[derive(Clone, Debug)]
pub struct CoefficientSet {
    pub a: Diffusivity,
    pub delta: f64,
    pub b: TimeField,
    pub c: Vec<TimeField>,
    pub d: TimeField,
    pub eta: TimeStack,
    pub l: TimeStack,
    pub sigma: Vec<TimeStack>,
    pub nu: Vec<TimeStack>,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: Vec<f64>,
    pub f0: TimeField,
    pub h0: TimeStack,
    pub g0: Vec<TimeStack>,
    /// Bound on the sup-norms of all coefficients.
    pub k_bound: f64,
}

impl CoefficientSet {
    /// All coefficients zero, `m` mark coordinates.
    pub fn zero(a: Diffusivity, delta: f64, marks: usize) -> Self {
        Self {
            a,
            delta,
            b: TimeField::Zero,
            c: Vec::new(),
            d: TimeField::Zero,
            eta: TimeStack::Zero,
            l: TimeStack::Zero,
            sigma: vec![TimeStack::Zero; marks],
            nu: vec![TimeStack::Zero; marks],
            beta1: 0.0,
            beta2: 0.0,
            beta3: vec![0.0; marks],
            f0: TimeField::Zero,
            h0: TimeStack::Zero,
            g0: vec![TimeStack::Zero; marks],
            k_bound: f64::INFINITY,
        }
    }

    pub fn marks(&self) -> usize {
        self.g0.len()
    }

    pub fn validate(&self, cfg: &SolverConfig) -> Result<(), IntegratorError> {
        let fail = |msg: String| Err(IntegratorError::Config(msg));
        self.a.validate(self.delta, cfg)?;
        let m = self.marks();
        if self.sigma.len() != m || self.nu.len() != m || self.beta3.len() != m {
            return fail(format!(
                "mark-indexed coefficients disagree: g₀ has {m}, σ {}, ν {}, β₃ {}",
                self.sigma.len(),
                self.nu.len(),
                self.beta3.len()
            ));
        }
        if !self.c.is_empty() && self.c.len() != cfg.grid.dim() {
            return fail(format!("{} gradient coefficients for dimension {}", self.c.len(), cfg.grid.dim()));
        }
        let alpha = cfg.alpha;
        if !(self.beta1 >= 0.0 && self.beta1 < alpha) {
            return fail(format!("β₁ = {} must satisfy 0 <= β₁ < α = {alpha}", self.beta1));
        }
        if !(self.beta2 >= 0.0 && self.beta2 < alpha / 2.0) {
            return fail(format!("β₂ = {} must satisfy 0 <= β₂ < α/2 = {}", self.beta2, alpha / 2.0));
        }
        for (j, b3) in self.beta3.iter().enumerate() {
            if !(*b3 >= 0.0 && *b3 < alpha / 2.0 - cfg.eps1) {
                return fail(format!(
                    "β₃^{j} = {b3} must satisfy 0 <= β₃ < α/2 − ε₁ = {}",
                    alpha / 2.0 - cfg.eps1
                ));
            }
        }
        let mut bounded: Vec<(&str, &TimeField)> = vec![("b", &self.b), ("d", &self.d)];
        bounded.extend(self.c.iter().map(|c| ("c", c)));
        for (name, f) in bounded {
            let s = field_sup(f, cfg);
            if s > self.k_bound {
                return fail(format!("sup |{name}| = {s} exceeds the bound K = {}", self.k_bound));
            }
        }
        let mut stacks: Vec<(&str, &TimeStack)> = vec![("η", &self.eta), ("l", &self.l)];
        stacks.extend(self.sigma.iter().map(|s| ("σ", s)));
        stacks.extend(self.nu.iter().map(|s| ("ν", s)));
        for (name, s) in stacks {
            let v = stack_sup(s, cfg);
            if v > self.k_bound {
                return fail(format!("sup |{name}| = {v} exceeds the bound K = {}", self.k_bound));
            }
        }
        Ok(())
    }

    /// Multiplies every multiplicative coefficient (not the forcing terms) by `s`.
    pub fn scale_nonlinearity(&self, s: f64) -> Self {
        let sf = |f: &TimeField| scale_field(f, s);
        let ss = |f: &TimeStack| scale_stack(f, s);
        Self {
            b: sf(&self.b),
            c: self.c.iter().map(sf).collect(),
            d: sf(&self.d),
            eta: ss(&self.eta),
            l: ss(&self.l),
            sigma: self.sigma.iter().map(ss).collect(),
            nu: self.nu.iter().map(ss).collect(),
            ..self.clone()
        }
    }
}

fn scale_field(f: &TimeField, s: f64) -> TimeField {
    match f {
        TimeField::Zero => TimeField::Zero,
        TimeField::Constant(v) => TimeField::Constant(v.scaled(s)),
        TimeField::Steps { offset, values } => {
            TimeField::Steps { offset: *offset, values: values.iter().map(|v| v.scaled(s)).collect() }
        }
        TimeField::Function(g) => {
            let g = g.clone();
            TimeField::Function(std::sync::Arc::new(move |t| g(t).scaled(s)))
        }
    }
}

fn scale_fields(stack: &FieldStack, s: f64) -> FieldStack {
    FieldStack::new(stack.components().iter().map(|c| c.scaled(s)).collect()).expect("non-empty stack")
}

fn scale_stack(f: &TimeStack, s: f64) -> TimeStack {
    match f {
        TimeStack::Zero => TimeStack::Zero,
        TimeStack::Constant(v) => TimeStack::Constant(scale_fields(v, s)),
        TimeStack::Steps { offset, values } => {
            TimeStack::Steps { offset: *offset, values: values.iter().map(|v| scale_fields(v, s)).collect() }
        }
        TimeStack::Function(g) => {
            let g = g.clone();
            TimeStack::Function(std::sync::Arc::new(move |t| scale_fields(&g(t), s)))
        }
    }
}

fn field_sup(f: &TimeField, cfg: &SolverConfig) -> f64 {
    (0..=cfg.steps())
        .filter_map(|n| f.at(n, n as f64 * cfg.dt).map(|v| v.sup_norm()))
        .fold(0.0, f64::max)
}

fn stack_sup(s: &TimeStack, cfg: &SolverConfig) -> f64 {
    (0..=cfg.steps())
        .filter_map(|n| s.at(n, n as f64 * cfg.dt))
        .flat_map(|v| v.components().iter().map(Field::sup_norm).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

/// `(f(u), h(u), g(u))` at one time; `None` marks an identically zero term.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearTerms {
    pub f: Option<Field>,
    pub h: Option<FieldStack>,
    pub g: Vec<Option<FieldStack>>,
}

fn accumulate(acc: &mut Option<Field>, term: Field) -> Result<(), IntegratorError> {
    *acc = Some(match acc.take() {
        None => term,
        Some(prev) => prev.add(&term)?,
    });
    Ok(())
}

/// `σ^k Δ^{β/2}u + ν^k u + g₀^k` for every `k`.
fn noise_term(
    u: &Field,
    frac: &mut Option<(f64, Field)>,
    beta: f64,
    mult: Option<FieldStack>,
    lin: Option<FieldStack>,
    base: Option<FieldStack>,
) -> Result<Option<FieldStack>, IntegratorError> {
    let count = [&mult, &lin, &base].iter().filter_map(|s| s.as_ref().map(FieldStack::count)).max();
    let Some(count) = count else { return Ok(None) };
    for s in [&mult, &lin, &base].into_iter().flatten() {
        if s.count() != count {
            return Err(IntegratorError::Config(format!(
                "noise coefficients disagree on the driver count ({} vs {count})",
                s.count()
            )));
        }
    }
    let mut comps = Vec::with_capacity(count);
    for k in 0..count {
        let mut acc = None;
        if let Some(m) = &mult {
            if frac.as_ref().is_none_or(|(b, _)| *b != beta) {
                *frac = Some((beta, frac_power(u, beta)?));
            }
            accumulate(&mut acc, m.component(k).mul(&frac.as_ref().expect("set above").1)?)?;
        }
        if let Some(l) = &lin {
            accumulate(&mut acc, l.component(k).mul(u)?)?;
        }
        if let Some(b) = &base {
            accumulate(&mut acc, b.component(k).clone())?;
        }
        comps.push(acc.unwrap_or_else(|| Field::zeros(*u.grid())));
    }
    Ok(Some(FieldStack::new(comps)?))
}

/// Evaluates the coefficient maps at state `u` and step `n` (time `t`).
pub fn evaluate_nonlinearity(
    u: &Field,
    n: usize,
    t: f64,
    coeffs: &CoefficientSet,
    cfg: &SolverConfig,
) -> Result<NonlinearTerms, IntegratorError> {
    let mut f = None;
    if let Some(b) = coeffs.b.at(n, t) {
        accumulate(&mut f, b.mul(&frac_power(u, coeffs.beta1)?)?)?;
    }
    if cfg.alpha > 1.0 {
        for (axis, c) in coeffs.c.iter().enumerate() {
            if let Some(c) = c.at(n, t) {
                accumulate(&mut f, c.mul(&partial_derivative(u, axis)?)?)?;
            }
        }
    }
    if let Some(d) = coeffs.d.at(n, t) {
        accumulate(&mut f, d.mul(u)?)?;
    }
    if let Some(f0) = coeffs.f0.at(n, t) {
        accumulate(&mut f, f0)?;
    }

    let mut frac = None;
    let h = noise_term(u, &mut frac, coeffs.beta2, coeffs.eta.at(n, t), coeffs.l.at(n, t), coeffs.h0.at(n, t))?;
    let mut g = Vec::with_capacity(coeffs.marks());
    for j in 0..coeffs.marks() {
        g.push(noise_term(
            u,
            &mut frac,
            coeffs.beta3[j],
            coeffs.sigma[j].at(n, t),
            coeffs.nu[j].at(n, t),
            coeffs.g0[j].at(n, t),
        )?);
    }
    Ok(NonlinearTerms { f, h, g })
}

/// Linear problem on steps `range` with coefficients frozen along `states`
/// (`states[i]` is the state at step `range.start + i`).
fn frozen_problem(
    states: &[Field],
    start: usize,
    coeffs: &CoefficientSet,
    a: Diffusivity,
    cfg: &SolverConfig,
) -> Result<LinearProblem, IntegratorError> {
    let marks = coeffs.marks();
    let mut f = Vec::with_capacity(states.len());
    let mut h = Vec::with_capacity(states.len());
    let mut g: Vec<Vec<Option<FieldStack>>> = vec![Vec::with_capacity(states.len()); marks];
    for (i, u) in states.iter().enumerate() {
        let n = start + i;
        let terms = evaluate_nonlinearity(u, n, n as f64 * cfg.dt, coeffs, cfg)?;
        f.push(terms.f);
        h.push(terms.h);
        for (j, gj) in terms.g.into_iter().enumerate() {
            g[j].push(gj);
        }
    }
    let grid = cfg.grid;
    let f = if f.iter().all(Option::is_none) {
        TimeField::Zero
    } else {
        TimeField::Steps { offset: start, values: f.into_iter().map(|v| v.unwrap_or_else(|| Field::zeros(grid))).collect() }
    };
    let to_stack = |v: Vec<Option<FieldStack>>| {
        let count = v.iter().flatten().map(FieldStack::count).next();
        match count {
            None => TimeStack::Zero,
            Some(count) => TimeStack::Steps {
                offset: start,
                values: v.into_iter().map(|s| s.unwrap_or_else(|| FieldStack::zeros(grid, count))).collect(),
            },
        }
    };
    Ok(LinearProblem {
        u0: states[0].clone(),
        f,
        h: to_stack(h),
        g: g.into_iter().map(to_stack).collect(),
        a,
    })
}

/// `(mean_paths Σ_n dt ‖a_n − b_n‖^p_{H^{γ+α}_p})^{1/p}` over steps after the first.
fn difference_norm(a: &[Vec<Field>], b: &[Vec<Field>], cfg: &SolverConfig) -> Result<f64, IntegratorError> {
    let mut total = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        for (x, y) in pa.iter().zip(pb).skip(1) {
            total += cfg.dt * sobolev_norm(&x.sub(y)?, cfg.gamma + cfg.alpha, cfg.p)?.powf(cfg.p);
        }
    }
    Ok((total / a.len() as f64).powf(1.0 / cfg.p))
}

enum SubintervalOutcome {
    Converged { states: Vec<Vec<Field>>, history: Vec<f64> },
    Stalled { history: Vec<f64> },
}

fn picard_subinterval(
    starts: &[Field],
    range: std::ops::Range<usize>,
    coeffs: &CoefficientSet,
    diffusivities: &[Diffusivity],
    drivers: &[PathDrivers],
    cfg: &SolverConfig,
) -> Result<SubintervalOutcome, IntegratorError> {
    let len = range.len() + 1;
    let sweep = |prev: &[Vec<Field>]| -> Result<Vec<Vec<Field>>, IntegratorError> {
        prev.iter()
            .zip(starts)
            .zip(diffusivities.iter().zip(drivers))
            .map(|((states, start), (a, drv))| {
                let problem = frozen_problem(&states[..len - 1], range.start, coeffs, a.clone(), cfg)?;
                check_drivers(&problem, drv, cfg)?;
                let mut out = Vec::with_capacity(len);
                out.push(start.clone());
                out.extend(march(cfg, &problem, drv, range.clone(), start)?);
                Ok(out)
            })
            .collect()
    };
    // u⁰ = 𝓡(0): the solution with the affine parts only
    let zero: Vec<Vec<Field>> = starts
        .iter()
        .map(|s| {
            let mut v = vec![Field::zeros(cfg.grid); len];
            v[0] = s.clone();
            v
        })
        .collect();
    let mut current = sweep(&zero)?;
    let mut history = Vec::new();
    loop {
        let next = sweep(&current)?;
        let diff = difference_norm(&next, &current, cfg)?;
        history.push(diff);
        current = next;
        if diff < cfg.picard_tol {
            return Ok(SubintervalOutcome::Converged { states: current, history });
        }
        let growing = history.len() >= 3 && history[history.len() - 1] >= history[history.len() - 2]
            && history[history.len() - 2] >= history[history.len() - 3];
        if growing || !diff.is_finite() || history.len() >= cfg.picard_max_iters {
            return Ok(SubintervalOutcome::Stalled { history });
        }
    }
}

/// Picard iteration `u^{n+1} = 𝓡(u^n)` run jointly on an ensemble of paths.
/// When the iteration stalls (difference norms stop decreasing) the horizon is
/// split into twice as many equal subintervals, chained sequentially.
pub fn picard_solve_ensemble(
    u0: &Field,
    coeffs: &CoefficientSet,
    drivers: &[PathDrivers],
    cfg: &SolverConfig,
) -> Result<Vec<SolutionPath>, IntegratorError> {
    cfg.validate()?;
    coeffs.validate(cfg)?;
    if drivers.is_empty() {
        return Err(IntegratorError::Config("at least one driver set (path) is required".into()));
    }
    let diffusivities: Vec<Diffusivity> = drivers.iter().map(|d| coeffs.a.resolve(cfg, d.path_index)).collect();
    for a in &diffusivities {
        a.validate(coeffs.delta, cfg)?;
    }
    let steps = cfg.steps();
    let mut pieces = 1;
    let mut last_history = Vec::new();
    while pieces <= steps {
        match picard_chain(u0, coeffs, &diffusivities, drivers, cfg, pieces)? {
            Ok((paths, history)) => {
                return paths
                    .into_iter()
                    .map(|states| {
                        let mut sol = SolutionPath::new(cfg, states)?;
                        sol.set_picard(history.clone(), pieces);
                        Ok(sol)
                    })
                    .collect();
            }
            Err(history) => last_history = history,
        }
        pieces *= 2;
    }
    Err(IntegratorError::Divergence { history: last_history })
}

type ChainResult = Result<(Vec<Vec<Field>>, Vec<f64>), Vec<f64>>;

fn picard_chain(
    u0: &Field,
    coeffs: &CoefficientSet,
    diffusivities: &[Diffusivity],
    drivers: &[PathDrivers],
    cfg: &SolverConfig,
    pieces: usize,
) -> Result<ChainResult, IntegratorError> {
    let steps = cfg.steps();
    let mut paths: Vec<Vec<Field>> = vec![vec![u0.clone()]; drivers.len()];
    let mut history = Vec::new();
    for piece in 0..pieces {
        let lo = piece * steps / pieces;
        let hi = (piece + 1) * steps / pieces;
        if lo == hi {
            continue;
        }
        let starts: Vec<Field> = paths.iter().map(|p| p.last().expect("non-empty").clone()).collect();
        match picard_subinterval(&starts, lo..hi, coeffs, diffusivities, drivers, cfg)? {
            SubintervalOutcome::Converged { states, history: h } => {
                history.extend(h);
                for (p, s) in paths.iter_mut().zip(states) {
                    p.extend(s.into_iter().skip(1));
                }
            }
            SubintervalOutcome::Stalled { history: h } => {
                history.extend(h);
                return Ok(Err(history));
            }
        }
    }
    Ok(Ok((paths, history)))
}

/// Single-path Picard solve.
pub fn picard_solve(
    u0: &Field,
    coeffs: &CoefficientSet,
    drivers: &PathDrivers,
    cfg: &SolverConfig,
) -> Result<SolutionPath, IntegratorError> {
    let mut out = picard_solve_ensemble(u0, coeffs, std::slice::from_ref(drivers), cfg)?;
    Ok(out.remove(0))
}

/// Geometric rate `exp(slope)` of a least-squares line through `ln d_i`,
/// using the entries above `floor`. `None` with fewer than two such entries.
pub fn fitted_contraction_ratio(history: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = history
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > floor)
        .map(|(i, d)| (i as f64, d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}
