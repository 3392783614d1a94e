use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{LevyError, LevyTriplet};
use crate::rng::substream;

/// Relative tolerance for `T / dt` to count as an integer.
pub const STEP_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub mark: Vec<f64>,
}

impl JumpEvent {
    pub fn norm(&self) -> f64 {
        self.mark.iter().map(|z| z * z).sum::<f64>().sqrt()
    }
}

/// One sampled driver on `[0, T]`: Wiener increments per step and the jump
/// events of the compound-Poisson part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriverPath {
    pub horizon: f64,
    pub dt: f64,
    pub steps: usize,
    pub dim: usize,
    /// `ΔW_n` for each step `n`, one `m`-vector each (zeros without a Gaussian part).
    pub wiener: Vec<Vec<f64>>,
    /// Jump events, strictly increasing in time.
    pub jumps: Vec<JumpEvent>,
    /// Compensator rate `Σ z_i λ_i`.
    pub jump_mean: Vec<f64>,
    pub drift: Vec<f64>,
    pub seed: u64,
    pub path_index: u64,
    pub driver_index: u64,
    pub recentred: bool,
    pub has_gaussian: bool,
}

impl DriverPath {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| n as f64 * self.dt).collect()
    }

    /// Index `n` of the step `(t_n, t_{n+1}]` that contains `τ`.
    pub fn step_of(&self, tau: f64) -> usize {
        (((tau / self.dt).ceil() as usize).max(1) - 1).min(self.steps - 1)
    }

    /// Jumps grouped by the step that contains them.
    pub fn jumps_by_step(&self) -> Vec<Vec<&JumpEvent>> {
        let mut out = vec![Vec::new(); self.steps];
        for j in &self.jumps {
            out[self.step_of(j.time)].push(j);
        }
        out
    }

    /// Number of jumps with mark exactly equal to `mark`.
    pub fn count_mark(&self, mark: &[f64]) -> usize {
        self.jumps.iter().filter(|j| j.mark == mark).count()
    }
}

/// Number of steps for `(T, dt)`, requiring `dt` to divide `T`.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize, LevyError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(LevyError::Config(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(LevyError::Config(format!("time step must be positive, got {dt}")));
    }
    let n = (horizon / dt).round();
    if n < 1.0 || (n * dt - horizon).abs() > STEP_TOLERANCE * horizon {
        return Err(LevyError::Config(format!("time step {dt} does not divide horizon {horizon}")));
    }
    Ok(n as usize)
}

/// Samples path 0 of driver 0 for `seed`.
pub fn sample_path(triplet: &LevyTriplet, horizon: f64, dt: f64, seed: u64) -> Result<DriverPath, LevyError> {
    sample_driver(triplet, horizon, dt, seed, 0, 0)
}

/// Samples Monte Carlo path `path` of driver `driver`. Gaussian and jump
/// parts use separate substreams so either can change without perturbing
/// the other.
pub fn sample_driver(
    triplet: &LevyTriplet,
    horizon: f64,
    dt: f64,
    seed: u64,
    path: u64,
    driver: u64,
) -> Result<DriverPath, LevyError> {
    let steps = step_count(horizon, dt)?;
    let m = triplet.dim();
    let spec = triplet.jumps();

    let mut wiener = vec![vec![0.0; m]; steps];
    let has_gaussian = triplet.has_gaussian();
    if has_gaussian {
        let mut rng = substream(seed, path, 2 * driver);
        let beta = triplet.gaussian();
        let small = (spec.small_jump_variance() * dt).sqrt();
        let sdt = dt.sqrt();
        let mut xi = vec![0.0; m];
        for inc in wiener.iter_mut() {
            xi.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
            for (i, out) in inc.iter_mut().enumerate() {
                *out = sdt * beta[i].iter().zip(&xi).map(|(b, x)| b * x).sum::<f64>();
            }
            if small > 0.0 {
                for out in inc.iter_mut() {
                    *out += small * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
    }

    let mut jumps = Vec::new();
    let rate = spec.total_rate();
    if rate > 0.0 {
        let mut rng = substream(seed, path, 2 * driver + 1);
        let gaps = Exp::new(rate).map_err(|e| LevyError::InvalidMeasure(e.to_string()))?;
        let marks = WeightedIndex::new(spec.atoms().iter().map(|a| a.rate))
            .map_err(|e| LevyError::InvalidMeasure(e.to_string()))?;
        let mut t = 0.0;
        loop {
            t += gaps.sample(&mut rng);
            if t > horizon {
                break;
            }
            let atom = &spec.atoms()[marks.sample(&mut rng)];
            jumps.push(JumpEvent { time: t, mark: atom.mark.clone() });
        }
    }

    Ok(DriverPath {
        horizon,
        dt,
        steps,
        dim: m,
        wiener,
        jumps,
        jump_mean: spec.mean_jump(),
        drift: triplet.drift().to_vec(),
        seed,
        path_index: path,
        driver_index: driver,
        recentred: triplet.is_recentred(),
        has_gaussian,
    })
}

/// Removes every jump with `|z| > n`. The compensator is kept, so the result
/// coincides with the original path before the first removed jump.
pub fn truncate_big_jumps(path: &DriverPath, n: f64) -> Result<(DriverPath, Option<f64>), LevyError> {
    if !(n > 0.0) {
        return Err(LevyError::Config(format!("truncation level must be positive, got {n}")));
    }
    let first = path.jumps.iter().find(|j| j.norm() > n).map(|j| j.time);
    let mut out = path.clone();
    out.jumps.retain(|j| j.norm() <= n);
    Ok((out, first))
}

/// Left-continuous step integrand: `H(s) = values[n]` on `(t_n, t_{n+1}]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepIntegrand {
    pub dt: f64,
    pub values: Vec<Vec<f64>>,
}

impl StepIntegrand {
    pub fn constant(value: Vec<f64>, steps: usize, dt: f64) -> Self {
        Self { dt, values: vec![value; steps] }
    }

    fn check(&self, path: &DriverPath) -> Result<(), LevyError> {
        if self.values.len() != path.steps || (self.dt - path.dt).abs() > STEP_TOLERANCE * path.dt {
            return Err(LevyError::Integrand(format!(
                "integrand covers {} steps of {}, path has {} steps of {}",
                self.values.len(),
                self.dt,
                path.steps,
                path.dt
            )));
        }
        if let Some(v) = self.values.iter().find(|v| v.len() != path.dim) {
            return Err(LevyError::Integrand(format!("integrand value of length {}, expected {}", v.len(), path.dim)));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `∫_0^T H · dY = Σ_τ H(τ-)·z − ∫_0^T H(s)·(Σ z_i λ_i) ds`.
pub fn compensated_integral(h: &StepIntegrand, path: &DriverPath) -> Result<f64, LevyError> {
    h.check(path)?;
    let jumps: f64 = path.jumps.iter().map(|j| dot(&h.values[path.step_of(j.time)], &j.mark)).sum();
    let compensator: f64 = h.values.iter().map(|v| dot(v, &path.jump_mean)).sum::<f64>() * path.dt;
    Ok(jumps - compensator)
}

/// `Σ_n H_n · ΔW_n`.
pub fn wiener_integral(h: &StepIntegrand, path: &DriverPath) -> Result<f64, LevyError> {
    h.check(path)?;
    Ok(h.values.iter().zip(&path.wiener).map(|(v, w)| dot(v, w)).sum())
}

/// Writes events as CSV rows `driver_index,event_type,time,mark_0,...`.
/// Wiener rows carry the increment over `(t_n, t_{n+1}]` at time `t_n`.
pub fn write_paths_csv<W: Write>(paths: &[DriverPath], out: W) -> Result<(), LevyError> {
    let dim = paths.iter().map(|p| p.dim).max().unwrap_or(1);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["driver_index".to_string(), "event_type".into(), "time".into()];
    header.extend((0..dim).map(|j| format!("mark_{j}")));
    w.write_record(&header)?;
    for p in paths {
        if p.has_gaussian {
            for (n, inc) in p.wiener.iter().enumerate() {
                let mut row = vec![p.driver_index.to_string(), "wiener".into(), (n as f64 * p.dt).to_string()];
                row.extend(inc.iter().map(f64::to_string));
                w.write_record(&row)?;
            }
        }
        for j in &p.jumps {
            let mut row = vec![p.driver_index.to_string(), "jump".into(), j.time.to_string()];
            row.extend(j.mark.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| LevyError::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{Atom, LevyMeasureSpec};

    fn symmetric_driver(lambda: f64) -> LevyTriplet {
        LevyTriplet::pure_jump(LevyMeasureSpec::symmetric(1.0, lambda).unwrap())
    }

    #[test]
    fn step_count_rules() {
        assert_eq!(step_count(1.0, 0.1).unwrap(), 10);
        assert!(step_count(1.0, 0.3).is_err());
        assert!(step_count(1.0, 0.0).is_err());
        assert!(step_count(-1.0, 0.1).is_err());
    }

    #[test]
    fn zero_rate_gives_pure_gaussian_path() {
        let p = sample_path(&LevyTriplet::wiener(), 1.0, 0.01, 4).unwrap();
        assert!(p.jumps.is_empty());
        assert_eq!(p.wiener.len(), 100);
        assert!(p.wiener.iter().any(|w| w[0] != 0.0));
    }

    #[test]
    fn reproducible_and_sorted() {
        let t = symmetric_driver(5.0);
        let a = sample_driver(&t, 2.0, 0.05, 9, 3, 1).unwrap();
        let b = sample_driver(&t, 2.0, 0.05, 9, 3, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.jumps.windows(2).all(|w| w[0].time < w[1].time));
        assert!(a.jumps.iter().all(|j| j.time > 0.0 && j.time <= 2.0));
        assert_ne!(a, sample_driver(&t, 2.0, 0.05, 9, 4, 1).unwrap());
    }

    #[test]
    fn constant_integrand_counts_signed_jumps() {
        let t = symmetric_driver(2.0);
        let p = sample_path(&t, 3.0, 0.1, 1).unwrap();
        let h = StepIntegrand::constant(vec![1.0], p.steps, p.dt);
        let m = compensated_integral(&h, &p).unwrap();
        let expected = p.count_mark(&[1.0]) as f64 - p.count_mark(&[-1.0]) as f64;
        assert!((m - expected).abs() < 1e-12);
        let zero = StepIntegrand::constant(vec![0.0], p.steps, p.dt);
        assert_eq!(compensated_integral(&zero, &p).unwrap(), 0.0);
        let short = StepIntegrand::constant(vec![1.0], p.steps - 1, p.dt);
        assert!(compensated_integral(&short, &p).is_err());
    }

    #[test]
    fn truncation() {
        let spec = LevyMeasureSpec::new(1, vec![Atom { mark: vec![5.0], rate: 1.0 }]).unwrap();
        let mut p = sample_path(&LevyTriplet::pure_jump(spec), 2.0, 0.5, 0).unwrap();
        p.jumps = vec![JumpEvent { time: 1.0, mark: vec![5.0] }];
        let (q, first) = truncate_big_jumps(&p, 3.0).unwrap();
        assert!(q.jumps.is_empty());
        assert_eq!(first, Some(1.0));
        let (r, none) = truncate_big_jumps(&p, 10.0).unwrap();
        assert_eq!(r, p);
        assert_eq!(none, None);
        assert!(truncate_big_jumps(&p, 0.0).is_err());
    }

    #[test]
    fn csv_dump_has_expected_columns() {
        let p = sample_path(&symmetric_driver(3.0), 1.0, 0.5, 2).unwrap();
        let mut buf = Vec::new();
        write_paths_csv(&[p.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("driver_index,event_type,time,mark_0"));
        assert_eq!(lines.count(), p.jumps.len());
    }
}
