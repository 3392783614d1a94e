//! White-noise kernel, weight and solver checks.

use std::f64::consts::PI;

use fracspde::integrator::{
    solve_deterministic, solve_linear, Diffusivity, LinearProblem, PathDrivers, SolverConfig, TimeField, TimeStack,
};
use fracspde::levy::{LevyMeasureSpec, LevyTriplet};
use fracspde::rng::substream;
use fracspde::spectral::{bessel_potential, random_band_limited, sobolev_norm, Complex64, Field, FieldStack, Grid};
use fracspde::whitenoise::*;
use statrs::function::gamma::gamma;

/// `K_ν(x) = ∫_0^∞ e^{−x cosh t} cosh(νt) dt` by the trapezoid rule.
fn bessel_k(nu: f64, x: f64) -> f64 {
    let h: f64 = 1e-3;
    let mut sum = 0.5 * (-x).exp();
    let mut t: f64 = h;
    loop {
        let v = (-x * t.cosh()).exp() * (nu * t).cosh();
        sum += v;
        if v < 1e-30 {
            break;
        }
        t += h;
    }
    sum * h
}

#[test]
fn kernel_matches_modified_bessel_closed_form() {
    for (gamma_, alpha) in [(-1.1, 1.0), (-1.4, 1.5), (-0.9, 1.0)] {
        let mu: f64 = -(gamma_ + alpha / 2.0);
        let nu = (mu - 1.0) / 2.0;
        for x in [0.05, 0.5, 1.0, 3.0, 10.0] {
            let exact = 2.0 * (x / 2.0f64).powf(nu) * bessel_k(nu, x);
            let got = r_gamma_kernel(x, gamma_, alpha).unwrap();
            assert!((got / exact - 1.0).abs() < 1e-8, "γ={gamma_} x={x}: {got} vs {exact}");
        }
    }
}

#[test]
fn fitted_normalization_is_the_bessel_potential_constant() {
    for (gamma_, alpha) in [(-1.1, 1.0), (-1.4, 1.5)] {
        let mu: f64 = -(gamma_ + alpha / 2.0);
        let kernel = BesselKernel::cached(gamma_, alpha, 16.0 * PI).unwrap();
        let expected = 1.0 / ((4.0 * PI).sqrt() * gamma(mu / 2.0));
        assert!((kernel.c / expected - 1.0).abs() < 1e-4, "{} vs {expected}", kernel.c);
        assert!(kernel.residual < 1e-3, "residual {}", kernel.residual);
    }
}

#[test]
fn scaled_kernel_reproduces_bessel_potential() {
    let grid = Grid::periodic_1d(64).unwrap();
    let kernel = BesselKernel::cached(-1.1, 1.0, 16.0 * PI).unwrap();
    let mut rng = substream(4, 0, 0);
    let f = random_band_limited(grid, &mut rng);
    let freqs = grid.frequency_magnitudes();
    let transform = kernel.fourier(&freqs);
    let mut coeffs = f.to_spectral().into_coeffs();
    coeffs.iter_mut().zip(&transform).for_each(|(c, t)| *c *= Complex64::new(kernel.c * t, 0.0));
    let conv = Field::new(grid, grid.inverse(&coeffs)).unwrap();
    let target = bessel_potential(&f, -0.6).unwrap();
    let err = conv.sub(&target).unwrap().lp_norm(2.0) / target.lp_norm(2.0);
    assert!(err < 1e-3, "{err}");
}

fn companion(k_basis: usize, modes: usize) -> WhiteNoiseConfig {
    WhiteNoiseConfig::new(-1.1, 1.0, 2.0, 1.0, k_basis, Grid::periodic_1d(modes).unwrap())
}

#[test]
fn hbar_basic_properties() {
    let cfg = companion(16, 64);
    let g = cfg.grid;
    let h0 = Field::from_fn(g, |x| 1.0 + 0.5 * x[0].sin()).unwrap();
    let xi0 = Field::from_fn(g, |x| 0.8 + 0.3 * (2.0 * x[0]).cos()).unwrap();
    assert!(hbar(&Field::zeros(g), &xi0, &cfg).unwrap().is_zero());
    let base = hbar(&h0, &xi0, &cfg).unwrap();
    assert!(base.values().iter().all(|v| *v > 0.0));
    assert_eq!(hbar(&h0.scaled(-2.0), &xi0, &cfg).unwrap(), base.scaled(2.0));
    let c = Field::constant(g, 0.5);
    let one = hbar(&h0, &Field::constant(g, 1.0), &cfg).unwrap();
    let half = hbar(&h0, &c, &cfg).unwrap();
    assert!(half.sub(&one.scaled(0.5)).unwrap().sup_norm() < 1e-14);

    // Hölder/Young chain with r = 1, s = ∞
    let kernel = BesselKernel::for_config(&cfg).unwrap();
    let bound = kernel.lq_norm(2.0) * xi0.sup_norm() * h0.lp_norm(2.0);
    assert!(base.lp_norm(2.0) <= bound * (1.0 + 1e-12));
}

#[test]
fn literal_example_exponents_are_rejected() {
    let cfg = WhiteNoiseConfig::new(-0.6, 1.0, 2.0, 1.0, 16, Grid::periodic_1d(64).unwrap());
    let g = cfg.grid;
    let one = Field::constant(g, 1.0);
    assert!(matches!(hbar(&one, &one, &cfg), Err(WhiteNoiseError::Exponents(_))));
}

#[test]
fn lemma_truncation_converges_monotonically() {
    let cfg = companion(16, 256);
    let g = cfg.grid;
    let h0 = Field::from_fn(g, |x| 1.0 + 0.5 * x[0].sin()).unwrap();
    let xi0 = Field::from_fn(g, |x| (0.5 * x[0].cos()).exp()).unwrap();
    let sweep = lemma_l_last1_sweep(&h0, &xi0, &cfg, &[16, 32, 64]).unwrap();
    assert!(sweep.pass, "{:?} {:?}", sweep.refinement_series, sweep.flags);
    let lhs: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&k| check_lemma_l_last1(&h0, &xi0, &WhiteNoiseConfig { k_basis: k, ..cfg.clone() }).unwrap().lhs)
        .collect();
    assert!(lhs.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-10)));
    let zero = lemma_l_last1_sweep(&Field::zeros(g), &xi0, &cfg, &[16, 32]).unwrap();
    assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
}

fn solver(modes: usize) -> (WhiteNoiseConfig, SolverConfig) {
    let grid = Grid::periodic_1d(modes).unwrap();
    let wn = WhiteNoiseConfig::new(-1.4, 1.5, 2.0, 1.0, 1, grid);
    let mut cfg = SolverConfig::new(1.5, -1.4, 2.0, 0.5, 0.05, grid);
    cfg.seed = 21;
    (wn, cfg)
}

#[test]
fn zero_intensity_reduces_to_deterministic_solve() {
    let (wn, cfg) = solver(32);
    let g = cfg.grid;
    let u0 = Field::from_fn(g, |x| x[0].sin()).unwrap();
    let f = TimeField::Constant(Field::from_fn(g, |x| (2.0 * x[0]).cos()).unwrap());
    let amp = NoiseAmplitude { linear: Some(Field::constant(g, 1.0)), offset: Some(Field::constant(g, 1.0)) };
    let a = Diffusivity::Constant(1.0);
    let sols = solve_white_noise(&u0, &f, &a, 0.5, &amp, &Field::zeros(g), &WhiteNoiseDrivers::Wiener, &wn, &cfg, 2)
        .unwrap();
    let det = solve_deterministic(&u0, &f, &a, &cfg).unwrap();
    assert_eq!(sols[1].states(), det.states());
}

#[test]
fn single_basis_function_matches_linear_solver_bitwise() {
    let (wn, cfg) = solver(32);
    let g = cfg.grid;
    let u0 = Field::from_fn(g, |x| x[0].cos()).unwrap();
    let xi = Field::from_fn(g, |x| 1.0 + 0.3 * x[0].sin()).unwrap();
    let offset = Field::from_fn(g, |x| 0.5 + (2.0 * x[0]).cos()).unwrap();
    let amp = NoiseAmplitude { linear: None, offset: Some(offset.clone()) };
    let a = Diffusivity::Constant(1.0);
    let sols = solve_white_noise(&u0, &TimeField::Zero, &a, 0.5, &amp, &xi, &WhiteNoiseDrivers::Wiener, &wn, &cfg, 3)
        .unwrap();
    let eta0 = BasisSpec::new(g, 1).unwrap().function(0);
    let shaped = xi.mul(&offset).unwrap();
    let problem = LinearProblem {
        u0: u0.clone(),
        f: TimeField::Zero,
        h: TimeStack::Constant(FieldStack::new(vec![eta0.mul(&shaped).unwrap()]).unwrap()),
        g: Vec::new(),
        a,
    };
    for (path, sol) in sols.iter().enumerate() {
        let drivers = PathDrivers::sample(&cfg, &[LevyTriplet::wiener()], &[], path as u64).unwrap();
        assert_eq!(sol.states(), solve_linear(&problem, &drivers, &cfg).unwrap().states());
    }
}

#[test]
fn guard_rails() {
    let (mut wn, mut cfg) = solver(16);
    let g = cfg.grid;
    let one = Field::constant(g, 1.0);
    let amp = NoiseAmplitude { linear: None, offset: Some(one.clone()) };
    let jumps = WhiteNoiseDrivers::Jump(LevyMeasureSpec::symmetric(1.0, 1.0).unwrap());
    let a = Diffusivity::Constant(1.0);
    wn.p = 4.0;
    cfg.p = 4.0;
    cfg.eps1 = SolverConfig::default_eps1(1.5, 4.0);
    let err = solve_white_noise(&one, &TimeField::Zero, &a, 0.5, &amp, &one, &jumps, &wn, &cfg, 1).unwrap_err();
    assert!(matches!(err, WhiteNoiseError::Unsupported(_)), "{err}");
    assert!(solve_white_noise(&one, &TimeField::Zero, &a, 0.5, &amp, &one, &WhiteNoiseDrivers::Wiener, &wn, &cfg, 1).is_ok());

    let (wn2, cfg2) = solver(16);
    assert!(solve_white_noise(&one, &TimeField::Zero, &a, 0.5, &amp, &one, &jumps, &wn2, &cfg2, 1).is_ok());
    let outside = WhiteNoiseConfig { gamma: -1.1, alpha: 1.0, ..wn2.clone() };
    let cfg3 = SolverConfig { gamma: -1.1, alpha: 1.0, ..cfg2 };
    let err = solve_white_noise(&one, &TimeField::Zero, &a, 0.5, &amp, &one, &WhiteNoiseDrivers::Wiener, &outside, &cfg3, 1)
        .unwrap_err();
    assert!(matches!(err, WhiteNoiseError::Exponents(_)));
}

#[test]
fn linear_multiplicative_noise_is_stable_in_basis_size() {
    let (wn, cfg) = solver(32);
    let g = cfg.grid;
    let u0 = Field::from_fn(g, |x| x[0].sin()).unwrap();
    let amp = NoiseAmplitude { linear: Some(Field::constant(g, 1.0)), offset: None };
    let a = Diffusivity::Constant(1.0);
    let energy = |k: usize| {
        let sols = solve_white_noise(
            &u0,
            &TimeField::Zero,
            &a,
            0.5,
            &amp,
            &Field::constant(g, 0.5),
            &WhiteNoiseDrivers::Wiener,
            &WhiteNoiseConfig { k_basis: k, ..wn.clone() },
            &cfg,
            200,
        )
        .unwrap();
        sols.iter().map(|s| sobolev_norm(s.final_state(), cfg.gamma, 2.0).unwrap().powi(2)).sum::<f64>() / 200.0
    };
    let (e8, e16) = (energy(8), energy(16));
    assert!(e8.is_finite() && e16.is_finite());
    assert!((e16 / e8 - 1.0).abs() < 0.05, "{e8} {e16}");
}

#[test]
fn kernel_csv_export() {
    let kernel = BesselKernel::cached(-1.1, 1.0, 16.0 * PI).unwrap();
    let mut buf = Vec::new();
    write_kernel_csv(&kernel, &[0.5, 1.0, 2.0], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("x,R_gamma"));
    assert_eq!(text.lines().count(), 4);
    assert!(write_kernel_csv(&kernel, &[0.0], Vec::new()).is_err());
}
