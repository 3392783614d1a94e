//! Cross-check of the random time change that turns
//! `u' = a(t) Δ^{α/2} u + f` into a constant-coefficient equation.
//!
//! With the clock `s = A(t) = ∫_0^t a`, the function `v(s) = u(φ(s))`,
//! `φ = A^{-1}`, solves `v' = Δ^{α/2} v + f(φ(s))/a(φ(s))`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{solve_deterministic, Diffusivity, IntegratorError, SolverConfig, TimeField};
use crate::quadrature::CompositeRule;
use crate::spectral::Field;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn clock(a: &Scalar, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    CompositeRule::new(0.0, t, 16, 8).integrate(|s| a(s))
}

/// `φ(s)`: Newton iteration on `A(t) = s` (A is increasing with `A' = a`).
fn inverse_clock(a: &Scalar, s: f64, guess: f64) -> f64 {
    let mut t = guess;
    for _ in 0..50 {
        let step = (clock(a, t) - s) / a(t);
        t -= step;
        if step.abs() < 1e-15 * (1.0 + t.abs()) {
            break;
        }
    }
    t
}

/// `L₂` distance between `u(T)` from the direct solve and `v(A(T))` from the
/// solve on the changed clock, both with the same number of steps.
pub fn time_change_cross_check(
    u0: &Field,
    f: &TimeField,
    a: Scalar,
    cfg: &SolverConfig,
) -> Result<f64, IntegratorError> {
    if matches!(f, TimeField::Steps { .. }) {
        return Err(IntegratorError::Unsupported("time change needs f as a function of continuous time".into()));
    }
    let direct = solve_deterministic(u0, f, &Diffusivity::Function(a.clone()), cfg)?;

    let steps = cfg.steps();
    let total = clock(&a, cfg.horizon);
    let mut changed = cfg.clone();
    changed.horizon = total;
    changed.dt = total / steps as f64;
    let forcing = match f {
        TimeField::Zero => TimeField::Zero,
        other => {
            let f = other.clone();
            let a = a.clone();
            TimeField::Function(Arc::new(move |s| {
                let t = inverse_clock(&a, s, s / a(0.0));
                f.at(0, t).expect("non-zero forcing").scaled(1.0 / a(t))
            }))
        }
    };
    let changed_sol = solve_deterministic(u0, &forcing, &Diffusivity::Constant(1.0), &changed)?;
    Ok(direct.final_state().sub(changed_sol.final_state())?.lp_norm(2.0))
}

/// Cross-check errors under repeated halving of `dt` and the fitted order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeChangeStudy {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
}

pub fn time_change_study(
    u0: &Field,
    f: &TimeField,
    a: Scalar,
    cfg: &SolverConfig,
    levels: usize,
) -> Result<TimeChangeStudy, IntegratorError> {
    let mut dts = Vec::with_capacity(levels);
    let mut errors = Vec::with_capacity(levels);
    let mut c = cfg.clone();
    for _ in 0..levels {
        errors.push(time_change_cross_check(u0, f, a.clone(), &c)?);
        dts.push(c.dt);
        c.dt /= 2.0;
    }
    let order = log_log_slope(&dts, &errors);
    Ok(TimeChangeStudy { dts, errors, order })
}

/// Least-squares slope of `ln y` against `ln x`.
pub(crate) fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = pts.iter().map(|(a, _)| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_and_inverse() {
        let a: Scalar = Arc::new(|t: f64| 1.0 + 0.5 * t.sin());
        let t: f64 = 1.3;
        let exact = t + 0.5 * (1.0 - t.cos());
        assert!((clock(&a, t) - exact).abs() < 1e-13);
        assert!((inverse_clock(&a, exact, 0.0) - t).abs() < 1e-12);
    }
}
