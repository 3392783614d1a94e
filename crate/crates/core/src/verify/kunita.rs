//! Moment bound for raw jump sums of `ℓ₂`-valued integrands.

use serde::{Deserialize, Serialize};

use super::{mean_and_std_error, ConfigDigest, InequalityReport, VerifyError};
use crate::levy::{sample_driver, step_count, LevyMeasureSpec, LevyTriplet, StepIntegrand, STEP_TOLERANCE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KunitaParams {
    pub p: f64,
    pub horizon: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
}

/// Tail mass below which the Poisson series is cut.
const POISSON_TAIL: f64 = 1e-12;

/// `E[(scale · N)^q]` for `N ~ Poisson(mean)`, summing the series until the
/// remaining probability mass is below `1e-12` and the terms are negligible.
pub fn poisson_moment_oracle(scale: f64, mean: f64, q: f64) -> f64 {
    if mean == 0.0 || scale == 0.0 {
        return 0.0;
    }
    let mut log_pmf = -mean;
    let mut cumulative = 0.0;
    let mut total = 0.0;
    let mut n = 0u64;
    loop {
        let pmf = log_pmf.exp();
        cumulative += pmf;
        let term = if n == 0 { 0.0 } else { pmf * (scale * n as f64).powf(q) };
        total += term;
        let past_mode = n as f64 > mean;
        if past_mode && 1.0 - cumulative < POISSON_TAIL && term <= 1e-17 * total {
            return total;
        }
        n += 1;
        log_pmf += mean.ln() - (n as f64).ln();
    }
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Compares
///
/// ```text
/// LHS = E[(Σ_k ∫∫ |g^k(s)|² |z|² N_k(ds, dz))^{p/2}]   (Monte Carlo, raw jumps)
/// RHS = (∫ Σ_k |g^k|² ds)^{p/2} + ∫ Σ_k |g^k|^p ds
/// ```
///
/// for deterministic step integrands `g^k` (one per driver) and i.i.d.
/// drivers with jump measure `spec`. When every `|g^k(s)|` is the same
/// constant and all atoms share one norm, the sum is a scaled Poisson
/// variable; the report then carries the series value as `oracle` and
/// fails if the Monte Carlo estimate misses it by more than 3 standard errors.
pub fn check_kunita(
    integrands: &[StepIntegrand],
    spec: &LevyMeasureSpec,
    params: &KunitaParams,
) -> Result<InequalityReport, VerifyError> {
    let steps = step_count(params.horizon, params.dt)?;
    if !(params.p >= 2.0 && params.p.is_finite()) {
        return Err(VerifyError::Config(format!("p = {} must satisfy 2 <= p < ∞", params.p)));
    }
    if integrands.is_empty() || params.paths == 0 {
        return Err(VerifyError::Config("need at least one integrand and one path".into()));
    }
    for g in integrands {
        if g.values.len() != steps || (g.dt - params.dt).abs() > STEP_TOLERANCE * params.dt {
            return Err(VerifyError::Config(format!(
                "integrand covers {} steps of {}, expected {steps} of {}",
                g.values.len(),
                g.dt,
                params.dt
            )));
        }
        if g.values.iter().any(|v| v.len() != spec.dim()) {
            return Err(VerifyError::Config(format!("integrand values must have length m = {}", spec.dim())));
        }
        if g.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(VerifyError::Config("integrands must be bounded".into()));
        }
    }
    let mut digest = ConfigDigest::new("kunita", &(params, spec))?;
    for g in integrands {
        for v in &g.values {
            digest.values(v);
        }
    }
    let digest = digest.finish();

    let half = params.p / 2.0;
    let quadratic: f64 = integrands.iter().flat_map(|g| &g.values).map(|v| sq(v)).sum::<f64>() * params.dt;
    let pth: f64 = integrands.iter().flat_map(|g| &g.values).map(|v| sq(v).powf(half)).sum::<f64>() * params.dt;
    let rhs = quadratic.powf(half) + pth;

    let triplet = LevyTriplet::pure_jump(spec.clone());
    let mut samples = Vec::with_capacity(params.paths);
    for path in 0..params.paths as u64 {
        let mut s = 0.0;
        for (k, g) in integrands.iter().enumerate() {
            let driver = sample_driver(&triplet, params.horizon, params.dt, params.seed, path, k as u64)?;
            for jump in &driver.jumps {
                s += sq(&g.values[driver.step_of(jump.time)]) * sq(&jump.mark);
            }
        }
        samples.push(s.powf(half));
    }
    let (lhs, se) = mean_and_std_error(&samples);
    let mut report = InequalityReport::new("kunita", lhs, rhs, digest).with_mc(params.paths, se);
    if spec.small_jump_variance() > 0.0 {
        report.flag("Gaussian small-jump part is not a jump and is excluded from N");
    }

    let g2: Vec<f64> = integrands.iter().flat_map(|g| &g.values).map(|v| sq(v)).collect();
    let a2: Vec<f64> = spec.atoms().iter().map(|a| sq(&a.mark)).collect();
    let uniform = |xs: &[f64]| xs.iter().all(|x| (x - xs[0]).abs() <= 1e-14 * xs[0].abs());
    if !a2.is_empty() && uniform(&g2) && uniform(&a2) {
        let mean = integrands.len() as f64 * spec.total_rate() * params.horizon;
        let oracle = poisson_moment_oracle(g2[0] * a2[0], mean, half);
        report.oracle = Some(oracle);
        let gap = (lhs - oracle).abs();
        let ok = if se > 0.0 { gap <= 3.0 * se } else { gap <= 1e-12 * oracle.abs().max(1e-300) };
        if !ok {
            report.pass = false;
            report.flag(format!("Monte Carlo {lhs} misses the Poisson-series value {oracle} (3σ = {})", 3.0 * se));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_poisson_moments() {
        // E N = μ, E N² = μ + μ², E N³ = μ³ + 3μ² + μ
        let mu: f64 = 2.3;
        assert!((poisson_moment_oracle(1.0, mu, 1.0) - mu).abs() < 1e-12);
        assert!((poisson_moment_oracle(1.0, mu, 2.0) - (mu + mu * mu)).abs() < 1e-11);
        assert!((poisson_moment_oracle(0.5, mu, 3.0) - 0.125 * (mu.powi(3) + 3.0 * mu * mu + mu)).abs() < 1e-11);
        assert_eq!(poisson_moment_oracle(1.0, 0.0, 2.0), 0.0);
    }

    #[test]
    fn zero_integrand_gives_zero() {
        let spec = LevyMeasureSpec::symmetric(1.0, 1.0).unwrap();
        let params = KunitaParams { p: 4.0, horizon: 1.0, dt: 0.1, paths: 10, seed: 1 };
        let g = StepIntegrand::constant(vec![0.0], 10, 0.1);
        let r = check_kunita(&[g], &spec, &params).unwrap();
        assert_eq!((r.lhs, r.rhs, r.ratio), (0.0, 0.0, 0.0));
        assert_eq!(r.oracle, Some(0.0));
        assert!(r.pass);
    }

    #[test]
    fn rejects_mismatched_integrands() {
        let spec = LevyMeasureSpec::symmetric(1.0, 1.0).unwrap();
        let params = KunitaParams { p: 2.0, horizon: 1.0, dt: 0.1, paths: 10, seed: 1 };
        assert!(check_kunita(&[StepIntegrand::constant(vec![1.0], 9, 0.1)], &spec, &params).is_err());
        assert!(check_kunita(&[StepIntegrand::constant(vec![1.0, 2.0], 10, 0.1)], &spec, &params).is_err());
    }
}
