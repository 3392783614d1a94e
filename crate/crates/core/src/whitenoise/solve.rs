use super::{BasisSpec, WhiteNoiseConfig, WhiteNoiseError};
use crate::integrator::{
    picard_solve_ensemble, CoefficientSet, Diffusivity, PathDrivers, SolutionPath, SolverConfig, TimeField, TimeStack,
};
use crate::levy::{LevyMeasureSpec, LevyTriplet};
use crate::spectral::Field;

/// Amplitude `h(u) = linear · u + offset`; absent parts are zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NoiseAmplitude {
    pub linear: Option<Field>,
    pub offset: Option<Field>,
}

/// Law of the i.i.d. scalar drivers `Z^k` attached to the basis functions.
#[derive(Clone, Debug, PartialEq)]
pub enum WhiteNoiseDrivers {
    Wiener,
    /// Compensated pure-jump drivers with a one-dimensional jump measure.
    Jump(LevyMeasureSpec),
}

/// `(w η^k)_k`, or `Zero` when `w` vanishes.
fn shaped_stack(basis: &BasisSpec, xi: &Field, part: &Option<Field>) -> Result<TimeStack, WhiteNoiseError> {
    match part {
        Some(p) => {
            let w = xi.mul(p)?;
            if w.is_zero() {
                Ok(TimeStack::Zero)
            } else {
                Ok(TimeStack::Constant(basis.shaped(&w)?))
            }
        }
        None => Ok(TimeStack::Zero),
    }
}

/// Solves
///
/// ```text
/// du = (a Δ^{α/2} u + f) dt + Σ_{k<K_basis} ξ h(u) η^k dZ^k
/// ```
///
/// on `paths` Monte Carlo paths by Picard iteration. Requires valid
/// exponents and `γ ∈ (−α, (−1−α)/2)`; jump drivers are accepted only for
/// `p = 2`.
#[allow(clippy::too_many_arguments)]
pub fn solve_white_noise(
    u0: &Field,
    f: &TimeField,
    a: &Diffusivity,
    delta: f64,
    h: &NoiseAmplitude,
    xi: &Field,
    drivers: &WhiteNoiseDrivers,
    wn: &WhiteNoiseConfig,
    solver: &SolverConfig,
    paths: usize,
) -> Result<Vec<SolutionPath>, WhiteNoiseError> {
    wn.require_valid()?;
    if let Some(v) = wn.theorem_range_violation() {
        return Err(WhiteNoiseError::Exponents(v));
    }
    if matches!(drivers, WhiteNoiseDrivers::Jump(_)) && wn.p != 2.0 {
        return Err(WhiteNoiseError::Unsupported(format!(
            "jump-driven white noise has only an L₂-theory: p must be 2, got p = {}",
            wn.p
        )));
    }
    if solver.alpha != wn.alpha || solver.gamma != wn.gamma || solver.p != wn.p || solver.grid != wn.grid {
        return Err(WhiteNoiseError::Config("solver and white-noise configs disagree on (α, γ, p, grid)".into()));
    }
    if paths == 0 {
        return Err(WhiteNoiseError::Config("need at least one path".into()));
    }
    let basis = BasisSpec::new(wn.grid, wn.k_basis)?;
    let linear = shaped_stack(&basis, xi, &h.linear)?;
    let offset = shaped_stack(&basis, xi, &h.offset)?;
    let cfg = SolverConfig { drivers: wn.k_basis, ..solver.clone() };

    let (coeffs, wiener, jumps) = match drivers {
        WhiteNoiseDrivers::Wiener => {
            let mut c = CoefficientSet::zero(a.clone(), delta, 0);
            c.l = linear;
            c.h0 = offset;
            (c, vec![LevyTriplet::wiener(); wn.k_basis], Vec::new())
        }
        WhiteNoiseDrivers::Jump(spec) => {
            if spec.dim() != 1 {
                return Err(WhiteNoiseError::Config(format!(
                    "white-noise jump drivers are scalar, got marks of dimension {}",
                    spec.dim()
                )));
            }
            let mut c = CoefficientSet::zero(a.clone(), delta, 1);
            c.nu[0] = linear;
            c.g0[0] = offset;
            (c, Vec::new(), vec![LevyTriplet::pure_jump(spec.clone()); wn.k_basis])
        }
    };
    let coeffs = CoefficientSet { f0: f.clone(), ..coeffs };
    let drivers = (0..paths as u64)
        .map(|p| PathDrivers::sample(&cfg, &wiener, &jumps, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(picard_solve_ensemble(u0, &coeffs, &drivers, &cfg)?)
}
