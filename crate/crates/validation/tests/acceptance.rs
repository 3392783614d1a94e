//! Acceptance criteria, one line each. Tolerances are fixed here and never
//! relaxed; the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use fracspde::integrator::{
    fitted_contraction_ratio, picard_solve_ensemble, stochastic_convolution_wiener, time_change_study, CoefficientSet,
    Diffusivity, LinearProblem, PathDrivers, SolverConfig, TimeField, TimeStack,
};
use fracspde::levy::{LevyMeasureSpec, LevyTriplet, StepIntegrand};
use fracspde::rng::substream;
use fracspde::spectral::{
    bessel_potential, frac_power, random_band_limited_with_cutoff, semigroup_apply, sobolev_norm, Field, FieldStack,
    Grid,
};
use fracspde::verify::{
    check_kunita, check_lemma32, check_linear_estimate, check_littlewood_paley, InequalityReport, KunitaParams,
    ParabolicParams, OUTSIDE_LEMMA_REGIME,
};
use fracspde::whitenoise::{lemma_l_last1_sweep, solve_white_noise, NoiseAmplitude, WhiteNoiseConfig, WhiteNoiseDrivers, WhiteNoiseError};
use statrs::distribution::{Discrete, Poisson};

type Outcome = Result<String, String>;

fn sine(g: Grid, k: f64) -> Field {
    Field::from_fn(g, |x| (k * x[0]).sin()).unwrap()
}

fn random_field(g: Grid, band: f64, seed: u64, draw: u64) -> Field {
    random_band_limited_with_cutoff(g, band, &mut substream(seed, draw, 0))
}

fn rel(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().sup_norm() / b.sup_norm()
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::MIN, f64::max);
    let min = xs.iter().cloned().fold(f64::MAX, f64::min);
    max / min - 1.0
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let elapsed = start.elapsed();
    if elapsed < limit {
        Ok(elapsed)
    } else {
        Err(format!("runtime {elapsed:.2?} exceeds {limit:?}"))
    }
}

/// 1. Spectral exactness on N = 256 to relative error 1e-10 within 5 s.
fn spectral_exactness() -> Outcome {
    let start = Instant::now();
    let g = Grid::periodic_1d(256).unwrap();
    let mut worst = 0.0f64;
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        for k in [1.0f64, 5.0, 40.0, 127.0] {
            let u = sine(g, k);
            worst = worst.max(rel(&frac_power(&u, alpha).unwrap(), &u.scaled(-k.powf(alpha))));
            let t = 0.2 / k.powf(alpha);
            let decayed = u.scaled((-1.3 * t * k.powf(alpha)).exp());
            worst = worst.max(rel(&semigroup_apply(&u, t, 1.3, alpha).unwrap(), &decayed));
        }
    }
    for (k, gamma) in [(1.0f64, -1.0f64), (7.0, 0.5), (60.0, -0.3)] {
        let exact = (1.0 + k * k).powf(gamma / 2.0) * PI.sqrt();
        worst = worst.max((sobolev_norm(&sine(g, k), gamma, 2.0).unwrap() / exact - 1.0).abs());
    }
    let u = random_field(g, 40.0, 1, 0);
    for (gamma, mu, p) in [(0.0, 1.0, 2.0), (-0.5, 2.0, 3.0), (1.0, -1.5, 4.0)] {
        let lifted = sobolev_norm(&bessel_potential(&u, mu).unwrap(), gamma, p).unwrap();
        let direct = sobolev_norm(&u, gamma + mu, p).unwrap();
        worst = worst.max((lifted / direct - 1.0).abs());
    }
    for alpha in [0.7, 1.0, 1.8] {
        let composed = semigroup_apply(&semigroup_apply(&u, 0.013, 1.0, alpha).unwrap(), 0.021, 1.0, alpha).unwrap();
        worst = worst.max(rel(&composed, &semigroup_apply(&u, 0.034, 1.0, alpha).unwrap()));
    }
    let elapsed = within_time(start, Duration::from_secs(5))?;
    if worst <= 1e-10 {
        Ok(format!("max relative error {worst:.2e} <= 1e-10 ({elapsed:.2?})"))
    } else {
        Err(format!("max relative error {worst:.2e} > 1e-10"))
    }
}

/// 2. Itô isometry for the Wiener stochastic convolution at M = 10⁴, K = 2,
/// N = 64, dt = 1e-2, within 3 standard errors and 60 s.
fn ito_isometry() -> Outcome {
    let start = Instant::now();
    let mut cfg = SolverConfig::new(1.0, 0.0, 2.0, 0.5, 0.01, Grid::periodic_1d(64).unwrap());
    cfg.drivers = 2;
    cfg.seed = 2024;
    let g = cfg.grid;
    let h = FieldStack::new(vec![random_field(g, 6.0, 5, 0), sine(g, 3.0).scaled(0.7)]).unwrap();
    let integrand = TimeStack::Constant(h.clone());
    let wiener = [LevyTriplet::wiener(), LevyTriplet::wiener()];
    // u_N = Σ_n T_{(N−n)dt} Σ_k h^k ΔW^k_n, so E‖u_N‖² = Σ_n dt Σ_k ‖T_{(N−n)dt} h^k‖²
    let steps = cfg.steps();
    let exact: f64 = (0..steps)
        .flat_map(|n| h.components().iter().map(move |c| (n, c)))
        .map(|(n, c)| {
            let lag = (steps - n) as f64 * cfg.dt;
            cfg.dt * semigroup_apply(c, lag, 1.0, cfg.alpha).unwrap().lp_norm(2.0).powi(2)
        })
        .sum();
    let squares: Vec<f64> = (0..10_000u64)
        .map(|path| {
            let d = PathDrivers::sample(&cfg, &wiener, &[], path).unwrap();
            stochastic_convolution_wiener(&integrand, &d.wiener, &cfg).unwrap().final_state().lp_norm(2.0).powi(2)
        })
        .collect();
    let (mean, se) = mean_and_se(&squares);
    let elapsed = within_time(start, Duration::from_secs(60))?;
    let z = (mean - exact).abs() / se;
    let msg = format!("MC {mean:.5} vs discrete sum {exact:.5}, |z| = {z:.2} ({elapsed:.2?})");
    if z <= 3.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Truncated Poisson series for `E[(s N)^q]`, `N ~ Poisson(mean)`.
fn poisson_series(scale: f64, mean: f64, q: f64) -> f64 {
    let law = Poisson::new(mean).unwrap();
    (1..500u64).map(|n| law.pmf(n) * (scale * n as f64).powf(q)).sum()
}

/// 3. Kunita: series oracle vs Monte Carlo within 3σ for p ∈ {2, 4}; ratio
/// growth < 2× when K doubles 4 → 8; within 120 s.
fn kunita() -> Outcome {
    let start = Instant::now();
    let (mark, rate, g, horizon) = (1.0, 0.5, 0.5, 1.0);
    let spec = LevyMeasureSpec::symmetric(mark, rate).unwrap();
    let mut notes = Vec::new();
    for p in [2.0, 4.0] {
        let params = KunitaParams { p, horizon, dt: 0.1, paths: 10_000, seed: 17 };
        let one = check_kunita(&[StepIntegrand::constant(vec![g], 10, 0.1)], &spec, &params).map_err(|e| e.to_string())?;
        // Σ|g|²|z|² over the jumps is (g·mark)² N with N ~ Poisson(2 rate T)
        let oracle = poisson_series((g * mark) * (g * mark), 2.0 * rate * horizon, p / 2.0);
        let z = (one.lhs - oracle).abs() / one.mc_std_error;
        if z > 3.0 {
            return Err(format!("p={p}: MC {} vs oracle {oracle}, |z| = {z:.2}", one.lhs));
        }
        let ratio = |k: usize| -> Result<f64, String> {
            let gs: Vec<StepIntegrand> = (0..k).map(|_| StepIntegrand::constant(vec![g], 10, 0.1)).collect();
            Ok(check_kunita(&gs, &spec, &params).map_err(|e| e.to_string())?.ratio)
        };
        let growth = ratio(8)? / ratio(4)?;
        if growth >= 2.0 {
            return Err(format!("p={p}: ratio grows {growth:.3}× from K=4 to K=8"));
        }
        notes.push(format!("p={p}: |z|={z:.2}, growth {growth:.3}×"));
    }
    let elapsed = within_time(start, Duration::from_secs(120))?;
    Ok(format!("{} ({elapsed:.2?})", notes.join("; ")))
}

/// 4. Littlewood–Paley: single-mode closed form to 1e-6; random-field ratio
/// within 10% across two dt halvings; within 120 s.
fn littlewood_paley() -> Outcome {
    let start = Instant::now();
    let grid = Grid::periodic_1d(32).unwrap();
    let mut worst = 0.0f64;
    for (k, alpha) in [(1.0f64, 1.0f64), (3.0, 1.5), (2.0, 0.7)] {
        let t = 0.8;
        let data = TimeStack::Constant(FieldStack::new(vec![sine(grid, k)]).unwrap());
        let r = check_littlewood_paley(&data, grid, &ParabolicParams::new(alpha, 2.0, t, 0.1)).map_err(|e| e.to_string())?;
        let lam = k.powf(alpha);
        let exact = PI * (t / 2.0 - (1.0 - (-2.0 * lam * t).exp()) / (4.0 * lam));
        worst = worst.max((r.lhs / exact - 1.0).abs());
    }
    if worst > 1e-6 {
        return Err(format!("single-mode relative error {worst:.2e} > 1e-6"));
    }
    let (a, b) = (random_field(grid, 8.0, 3, 0), random_field(grid, 8.0, 3, 1));
    let g = TimeStack::Function(Arc::new(move |t: f64| FieldStack::new(vec![a.scaled(t.cos()), b.scaled(1.0 + t)]).unwrap()));
    let ratios = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| Ok(check_littlewood_paley(&g, grid, &ParabolicParams::new(1.0, 3.0, 1.0, dt)).map_err(|e| e.to_string())?.ratio))
        .collect::<Result<Vec<f64>, String>>()?;
    let drift = spread(&ratios);
    let elapsed = within_time(start, Duration::from_secs(120))?;
    let msg = format!("closed form {worst:.1e}; ratios {ratios:.4?}, spread {:.2}% ({elapsed:.2?})", 100.0 * drift);
    if drift < 0.10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// 5. ε-threshold at p = 4, α = 1: ε = 0.35 drifts < 15% per grid doubling;
/// the ε = 0.10 run carries the outside-regime flag.
fn lemma32_threshold() -> Outcome {
    let base = Grid::periodic_1d(16).unwrap();
    let params = ParabolicParams::new(1.0, 4.0, 0.5, 0.1);
    let run = |eps: f64| -> Result<Vec<InequalityReport>, String> {
        let mut grid = base;
        let mut out = Vec::new();
        for _ in 0..3 {
            let f = TimeField::Constant(random_field(grid, 4.0, 9, 0));
            out.push(check_lemma32(&f, grid, eps, &params).map_err(|e| e.to_string())?);
            grid = grid.refined();
        }
        Ok(out)
    };
    let inside: Vec<f64> = run(0.35)?.iter().map(|r| r.ratio).collect();
    let outside = run(0.10)?;
    let flagged = outside.iter().all(|r| r.flags.iter().any(|f| f.contains(OUTSIDE_LEMMA_REGIME)));
    let worst = inside.windows(2).map(|w| (w[1] / w[0] - 1.0).abs()).fold(0.0, f64::max);
    let outside_ratios: Vec<f64> = outside.iter().map(|r| r.ratio).collect();
    let msg = format!(
        "ε=0.35 ratios {inside:.4?} (max drift {:.2}%); ε=0.10 ratios {outside_ratios:.4?} flagged={flagged}",
        100.0 * worst
    );
    if worst < 0.15 && flagged {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// 6. Linear a-priori estimate: over 5 random data draws and one dt
/// refinement the ratio drifts < 25%, for Wiener p = 2, 4 and jumps p = 2;
/// within 10 min.
fn linear_estimate() -> Outcome {
    let start = Instant::now();
    let grid = Grid::periodic_1d(32).unwrap();
    let jump = LevyTriplet::pure_jump(LevyMeasureSpec::symmetric(1.0, 1.0).unwrap());
    let mut notes = Vec::new();
    for (label, p, jumps) in [("wiener p=2", 2.0, false), ("wiener p=4", 4.0, false), ("jump p=2", 2.0, true)] {
        let mut ratios = Vec::new();
        for draw in 0..5u64 {
            let field = |i: u64| random_field(grid, 8.0, 100 + draw, i);
            let noise = TimeStack::Constant(FieldStack::new(vec![field(2)]).unwrap());
            let problem = LinearProblem {
                u0: field(0),
                f: TimeField::Constant(field(1)),
                h: if jumps { TimeStack::Zero } else { noise.clone() },
                g: if jumps { vec![noise] } else { Vec::new() },
                a: Diffusivity::Constant(1.0),
            };
            for dt in [0.05, 0.025] {
                let mut cfg = SolverConfig::new(1.0, 0.0, p, 0.5, dt, grid);
                cfg.seed = draw;
                let (w, j) = if jumps { (vec![], vec![jump.clone()]) } else { (vec![LevyTriplet::wiener()], vec![]) };
                let r = check_linear_estimate(&cfg, &problem, &w, &j, 200).map_err(|e| e.to_string())?;
                if !r.pass {
                    return Err(format!("{label}: report failed {:?}", r.flags));
                }
                ratios.push(r.ratio);
            }
        }
        let drift = spread(&ratios);
        if drift >= 0.25 {
            return Err(format!("{label}: ratios {ratios:.3?} spread {:.1}% >= 25%", 100.0 * drift));
        }
        notes.push(format!("{label}: spread {:.1}%", 100.0 * drift));
    }
    let elapsed = within_time(start, Duration::from_secs(600))?;
    Ok(format!("{} ({elapsed:.2?})", notes.join("; ")))
}

fn example_coefficients(grid: Grid, scale: f64) -> CoefficientSet {
    let mut c = CoefficientSet::zero(Diffusivity::Constant(1.0), 0.5, 0);
    c.beta1 = 0.5;
    c.beta2 = 0.25;
    let bump = |phase: f64| Field::from_fn(grid, move |x| scale * (x[0] + phase).cos()).unwrap();
    c.b = TimeField::Constant(bump(0.0));
    c.d = TimeField::Constant(bump(1.0));
    c.eta = TimeStack::Constant(FieldStack::new(vec![bump(2.0)]).unwrap());
    c.l = TimeStack::Constant(FieldStack::new(vec![bump(3.0)]).unwrap());
    c.f0 = TimeField::Constant(sine(grid, 1.0));
    c.h0 = TimeStack::Constant(FieldStack::new(vec![sine(grid, 2.0).scaled(0.3)]).unwrap());
    c
}

/// 7. Picard contraction: fitted ratio < 0.9 at sup-norm 0.2, smaller at 0.1,
/// exactly one iteration without nonlinearity.
fn picard() -> Outcome {
    let mut cfg = SolverConfig::new(1.0, 0.0, 2.0, 0.5, 0.01, Grid::periodic_1d(32).unwrap());
    cfg.picard_tol = 1e-12;
    let u0 = sine(cfg.grid, 3.0);
    let drivers: Vec<PathDrivers> =
        (0..8).map(|p| PathDrivers::sample(&cfg, &[LevyTriplet::wiener()], &[], p).unwrap()).collect();
    let history = |c: &CoefficientSet| -> Result<Vec<f64>, String> {
        let sols = picard_solve_ensemble(&u0, c, &drivers, &cfg).map_err(|e| e.to_string())?;
        Ok(sols[0].picard_history().to_vec())
    };
    let fitted = |scale: f64| -> Result<f64, String> {
        fitted_contraction_ratio(&history(&example_coefficients(cfg.grid, scale))?, 1e-13)
            .ok_or_else(|| "too few iterations to fit a ratio".to_string())
    };
    let (full, half) = (fitted(0.2)?, fitted(0.1)?);
    let linear = CoefficientSet {
        b: TimeField::Zero,
        d: TimeField::Zero,
        eta: TimeStack::Zero,
        l: TimeStack::Zero,
        ..example_coefficients(cfg.grid, 0.2)
    };
    let iterations = history(&linear)?.len();
    let msg = format!("fitted ratio {full:.4} at 0.2, {half:.4} at 0.1; linear case {iterations} iteration(s)");
    if full < 0.9 && half < full && iterations == 1 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// 8. Time change: fitted order 1.0 ± 0.2 in dt.
fn time_change() -> Outcome {
    let cfg = SolverConfig::new(1.0, 0.0, 2.0, 1.0, 0.05, Grid::periodic_1d(32).unwrap());
    let f = TimeField::Constant(Field::from_fn(cfg.grid, |x| x[0].cos()).unwrap());
    let a: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(|t: f64| 1.0 + 0.5 * t.sin());
    let study = time_change_study(&sine(cfg.grid, 2.0), &f, a, &cfg, 4).map_err(|e| e.to_string())?;
    let msg = format!("errors {:?}, fitted order {:.3}", study.errors, study.order);
    if (study.order - 1.0).abs() <= 0.2 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn lemma_sweep(gamma: f64) -> Outcome {
    let cfg = WhiteNoiseConfig::new(gamma, 1.0, 2.0, 1.0, 16, Grid::periodic_1d(256).unwrap());
    let g = cfg.grid;
    let h0 = Field::from_fn(g, |x| 1.0 + 0.5 * x[0].sin()).unwrap();
    let xi0 = Field::from_fn(g, |x| (0.5 * x[0].cos()).exp()).unwrap();
    let report = lemma_l_last1_sweep(&h0, &xi0, &cfg, &[16, 32, 64]).map_err(|e| format!("rejected: {e}"))?;
    let gaps: Vec<f64> = report.refinement_series.iter().flatten().map(|r| (r - 1.0).abs()).collect();
    let msg = format!("|LHS/RHS − 1| over K_basis 16, 32, 64: {gaps:.4?}; flags {:?}", report.flags);
    if report.pass {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// 9. Weight lemma at γ = −0.6, α = 1, p = 2, r = 1, s = ∞.
fn weight_lemma() -> Outcome {
    lemma_sweep(-0.6)
}

/// 10. Guard rails: ε₁ = 0 accepted at p = 2 and rejected at p = 4; jump
/// drivers rejected by the white-noise solver at p = 4.
fn guard_rails() -> Outcome {
    let grid = Grid::periodic_1d(16).unwrap();
    let with_eps = |p: f64| SolverConfig { eps1: 0.0, ..SolverConfig::new(1.0, 0.0, p, 0.5, 0.05, grid) };
    let p2 = with_eps(2.0).validate();
    let p4 = with_eps(4.0).validate();
    let mut wn = WhiteNoiseConfig::new(-1.4, 1.5, 4.0, 1.0, 4, grid);
    wn.p = 4.0;
    let solver = SolverConfig::new(1.5, -1.4, 4.0, 0.5, 0.05, grid);
    let one = Field::constant(grid, 1.0);
    let jumps = WhiteNoiseDrivers::Jump(LevyMeasureSpec::symmetric(1.0, 1.0).unwrap());
    let amp = NoiseAmplitude { linear: None, offset: Some(one.clone()) };
    let wn_result = solve_white_noise(&one, &TimeField::Zero, &Diffusivity::Constant(1.0), 0.5, &amp, &one, &jumps, &wn, &solver, 1);
    let jump_rejected = matches!(wn_result, Err(WhiteNoiseError::Unsupported(_)));
    let msg = format!(
        "p=2 ε₁=0 accepted: {}; p=4 ε₁=0 rejected: {}; white-noise jumps at p=4 rejected: {jump_rejected}",
        p2.is_ok(),
        p4.is_err()
    );
    if p2.is_ok() && p4.is_err() && jump_rejected {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("spectral exactness", spectral_exactness),
        ("Itô isometry", ito_isometry),
        ("Kunita oracle", kunita),
        ("Littlewood-Paley", littlewood_paley),
        ("ε-threshold", lemma32_threshold),
        ("linear a-priori estimate", linear_estimate),
        ("Picard contraction", picard),
        ("time-change equivalence", time_change),
        ("white-noise weight lemma", weight_lemma),
        ("guard rails", guard_rails),
    ];
    let mut passed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => {
                passed += 1;
                println!("criterion {:>2} PASS {name}: {detail}", i + 1);
            }
            Err(detail) => println!("criterion {:>2} FAIL {name}: {detail}", i + 1),
        }
        if i == 8 {
            // same check on an exponent set that satisfies every constraint
            let companion = match lemma_sweep(-1.1) {
                Ok(d) => format!("pass: {d}"),
                Err(d) => format!("fail: {d}"),
            };
            println!("   (companion at γ = −1.1, not counted) {companion}");
        }
    }
    println!("acceptance: {passed}/{} criteria pass", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
