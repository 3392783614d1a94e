//! Monte Carlo checks of the sampled drivers.

use fracspde::levy::{
    compensated_integral, sample_driver, Atom, LevyMeasureSpec, LevyTriplet, StepIntegrand,
};

const PATHS: u64 = 10_000;

fn mean_and_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn skewed_driver() -> LevyTriplet {
    let spec = LevyMeasureSpec::new(
        1,
        vec![
            Atom { mark: vec![1.5], rate: 0.8 },
            Atom { mark: vec![-0.4], rate: 1.7 },
            Atom { mark: vec![0.2], rate: 0.5 },
        ],
    )
    .unwrap();
    LevyTriplet::pure_jump(spec)
}

#[test]
fn jump_count_has_poisson_mean() {
    let spec = LevyMeasureSpec::symmetric(1.0, 1.5).unwrap();
    let driver = LevyTriplet::pure_jump(spec);
    let counts: Vec<f64> = (0..PATHS)
        .map(|i| sample_driver(&driver, 2.0, 0.1, 42, i, 0).unwrap().jumps.len() as f64)
        .collect();
    let (mean, se) = mean_and_error(&counts);
    assert!((mean - 6.0).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn compensated_jump_part_has_mean_zero() {
    let driver = skewed_driver();
    let values: Vec<f64> = (0..PATHS)
        .map(|i| {
            let p = sample_driver(&driver, 1.0, 0.05, 7, i, 0).unwrap();
            compensated_integral(&StepIntegrand::constant(vec![1.0], p.steps, p.dt), &p).unwrap()
        })
        .collect();
    let (mean, se) = mean_and_error(&values);
    assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn compensated_integral_isometry() {
    let driver = skewed_driver();
    let horizon = 1.0;
    let h = 0.7;
    let squares: Vec<f64> = (0..PATHS)
        .map(|i| {
            let p = sample_driver(&driver, horizon, 0.05, 11, i, 0).unwrap();
            compensated_integral(&StepIntegrand::constant(vec![h], p.steps, p.dt), &p).unwrap().powi(2)
        })
        .collect();
    let (mean, se) = mean_and_error(&squares);
    let exact: f64 =
        horizon * driver.jumps().atoms().iter().map(|a| (h * a.mark[0]).powi(2) * a.rate).sum::<f64>();
    assert!((mean - exact).abs() < 3.0 * se, "mean {mean} exact {exact} se {se}");
}

#[test]
fn time_varying_integrand_is_mean_zero() {
    let driver = skewed_driver();
    let values: Vec<f64> = (0..PATHS)
        .map(|i| {
            let p = sample_driver(&driver, 1.0, 0.1, 3, i, 0).unwrap();
            let h = StepIntegrand {
                dt: p.dt,
                values: (0..p.steps).map(|n| vec![(n as f64 * 0.9).sin() + 0.3]).collect(),
            };
            compensated_integral(&h, &p).unwrap()
        })
        .collect();
    let (mean, se) = mean_and_error(&values);
    assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
}
