//! Multiplier-type inequalities: bounded Fourier multipliers, Sobolev norm
//! equivalence, interpolation and pointwise multiplication.

use serde::{Deserialize, Serialize};

use super::{merge_refinements, ConfigDigest, InequalityReport, RefinementRule, VerifyError, EXACT_BOUND_TOLERANCE};
use crate::rng::substream;
use crate::spectral::{apply_symbol, random_band_limited_with_cutoff, sobolev_norm, EtaIndex, Field, Grid, MultiplierSymbol};

/// Random-field sweep parameters shared by the multiplier checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierParams {
    pub p: f64,
    /// Random band-limited fields per grid.
    pub trials: usize,
    pub seed: u64,
    /// Number of grid doublings after the base grid.
    pub refinements: usize,
    /// Allowed relative drift of the ratio per doubling.
    pub drift: f64,
    /// Band limit of the random fields, in integer wavenumbers; fixed across
    /// grids so that refinement only changes the discretization.
    pub cutoff: f64,
}

impl MultiplierParams {
    pub fn new(p: f64, trials: usize, seed: u64) -> Self {
        Self { p, trials, seed, refinements: 1, drift: 0.1, cutoff: 8.0 }
    }

    fn validate(&self, grid: Grid) -> Result<(), VerifyError> {
        if !(self.p >= 1.0 && self.p.is_finite()) || self.trials == 0 {
            return Err(VerifyError::Config(format!("need p >= 1 and at least one trial (p = {})", self.p)));
        }
        if !(self.cutoff >= 1.0 && 2.0 * self.cutoff < grid.modes() as f64) {
            return Err(VerifyError::Config(format!(
                "band limit {} must lie in [1, N/2) for N = {}",
                self.cutoff,
                grid.modes()
            )));
        }
        Ok(())
    }

    /// Base grid and its doublings, each carrying the same random fields:
    /// the draws depend only on the seed and the band limit, not on `N`.
    fn levels(&self, grid: Grid) -> Vec<(Grid, Vec<Field>)> {
        let mut out = Vec::with_capacity(self.refinements + 1);
        let mut g = grid;
        for _ in 0..=self.refinements {
            let mut rng = substream(self.seed, 0, 0);
            out.push((g, (0..self.trials).map(|_| random_band_limited_with_cutoff(g, self.cutoff, &mut rng)).collect()));
            g = g.refined();
        }
        out
    }
}

/// Largest `‖T_η u‖_p / ‖u‖_p` over random band-limited fields, for the
/// bounded multiplier `η^i_β`, tracked under grid doubling. For `p = 2`,
/// Parseval makes `max |η|` on the grid an exact bound, which is enforced.
pub fn check_multiplier_bounds(
    index: EtaIndex,
    beta: f64,
    grid: Grid,
    params: &MultiplierParams,
) -> Result<InequalityReport, VerifyError> {
    params.validate(grid)?;
    let symbol = MultiplierSymbol::Eta { index, beta };
    let name = format!("multiplier_eta{}", index.number());
    let mut reports = Vec::new();
    for (g, fields) in params.levels(grid) {
        let mut digest = ConfigDigest::new(&name, &(params, g, index, beta))?;
        let mut best = (0.0, 1.0, f64::NEG_INFINITY);
        for u in &fields {
            digest.field(u);
            let lhs = apply_symbol(u, &symbol)?.lp_norm(params.p);
            let rhs = u.lp_norm(params.p);
            if rhs > 0.0 && lhs / rhs > best.2 {
                best = (lhs, rhs, lhs / rhs);
            }
        }
        let mut report = InequalityReport::new(name.clone(), best.0, best.1, digest.finish());
        if params.p == 2.0 {
            let sup = symbol.table(&g)?.into_iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            report.require_ratio_at_most(sup, EXACT_BOUND_TOLERANCE);
        }
        reports.push(report);
    }
    Ok(merge_refinements(reports, RefinementRule::Drift(params.drift)))
}

/// Equivalence `‖u‖_{H^γ_p} ≍ ‖u‖_p + ‖(−Δ)^{γ/2} u‖_p`: over random fields
/// the ratio stays in `[1/C, C]`; the report's `lhs` and `ratio` are `C`.
pub fn check_norm_equivalence(gamma: f64, grid: Grid, params: &MultiplierParams) -> Result<InequalityReport, VerifyError> {
    params.validate(grid)?;
    if !(gamma > 0.0) {
        return Err(VerifyError::Config(format!("norm equivalence is checked for γ > 0, got {gamma}")));
    }
    let mut reports = Vec::new();
    for (g, fields) in params.levels(grid) {
        let mut digest = ConfigDigest::new("norm_equivalence", &(params, g, gamma))?;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for u in &fields {
            digest.field(u);
            let bessel = sobolev_norm(u, gamma, params.p)?;
            let split = u.lp_norm(params.p) + apply_symbol(u, &MultiplierSymbol::AbsPower(gamma))?.lp_norm(params.p);
            let r = bessel / split;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let c = hi.max(1.0 / lo);
        reports.push(InequalityReport::new("norm_equivalence", c, 1.0, digest.finish()));
    }
    Ok(merge_refinements(reports, RefinementRule::Drift(params.drift)))
}

/// `‖u‖_{H^{γ+α₁}_p} ≤ c ‖u‖^{θ}_{H^{γ+α}_p} ‖u‖^{1−θ}_{H^γ_p}` with `θ = α₁/α`.
/// For `p = 2` the inequality holds with `c = 1` (Hölder on the Fourier side),
/// which is enforced.
pub fn check_interpolation(u: &Field, gamma: f64, alpha: f64, alpha1: f64, p: f64) -> Result<InequalityReport, VerifyError> {
    if !(alpha1 > 0.0 && alpha1 < alpha) {
        return Err(VerifyError::Config(format!("need 0 < α₁ < α, got α₁ = {alpha1}, α = {alpha}")));
    }
    let mut digest = ConfigDigest::new("interpolation", &(gamma, alpha, alpha1, p))?;
    digest.field(u);
    let theta = alpha1 / alpha;
    let lhs = sobolev_norm(u, gamma + alpha1, p)?;
    let rhs = sobolev_norm(u, gamma + alpha, p)?.powf(theta) * sobolev_norm(u, gamma, p)?.powf(1.0 - theta);
    let mut report = InequalityReport::new("interpolation", lhs, rhs, digest.finish());
    if p == 2.0 {
        report.require_ratio_at_most(1.0, EXACT_BOUND_TOLERANCE);
    }
    Ok(report)
}

/// `‖a h‖_{H^γ_p} ≤ sup|a| ‖h‖_{H^γ_p}`, available for `γ = 0` only, where it
/// holds exactly node by node.
pub fn check_pointwise_multiplier(a: &Field, h: &Field, gamma: f64, p: f64) -> Result<InequalityReport, VerifyError> {
    if gamma != 0.0 {
        return Err(VerifyError::Unsupported(format!(
            "pointwise multiplier bounds are only checked for γ = 0 (got γ = {gamma})"
        )));
    }
    let mut digest = ConfigDigest::new("pointwise_multiplier", &p)?;
    digest.field(a).field(h);
    let lhs = a.mul(h)?.lp_norm(p);
    let rhs = a.sup_norm() * h.lp_norm(p);
    let mut report = InequalityReport::new("pointwise_multiplier", lhs, rhs, digest.finish());
    report.require_ratio_at_most(1.0, 1e-12);
    Ok(report)
}
