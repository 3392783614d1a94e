use super::{hbar, BasisSpec, BesselKernel, WhiteNoiseConfig, WhiteNoiseError};
use crate::spectral::{ell2_sobolev_norm, Field};
use crate::verify::{merge_refinements, InequalityReport, RefinementRule};

/// Tolerance on the Hölder upper bound, absorbing kernel quadrature error.
const HOLDER_TOLERANCE: f64 = 1e-8;

/// Norm identity for the white-noise coefficients
/// `g₀^k = ξ₀ h₀ η^k` (`k < K_basis`):
///
/// ```text
/// LHS = ‖g₀‖_{H^{γ+α/2}_p(ℓ₂)}      RHS = c ‖h̄‖_p
/// ```
///
/// where `c` is the fitted kernel normalization. Equality holds only for the
/// full basis; at every truncation the report fails if `LHS` exceeds the
/// Hölder bound `c ‖R_γ‖_{2r} ‖ξ₀‖_{2s} ‖h₀‖_p`.
pub fn check_lemma_l_last1(h0: &Field, xi0: &Field, cfg: &WhiteNoiseConfig) -> Result<InequalityReport, WhiteNoiseError> {
    cfg.require_valid()?;
    let basis = BasisSpec::new(cfg.grid, cfg.k_basis)?;
    let product = xi0.mul(h0)?;
    let lhs = ell2_sobolev_norm(&basis.shaped(&product)?, cfg.order(), cfg.p)?;
    let kernel = BesselKernel::for_config(cfg)?;
    let rhs = kernel.c * hbar(h0, xi0, cfg)?.lp_norm(cfg.p);
    let holder = kernel.c * kernel.lq_norm(2.0 * cfg.r) * xi0.lp_norm(2.0 * cfg.s) * h0.lp_norm(cfg.p);

    let mut digest = sha_digest(cfg, h0, xi0)?;
    digest.push_str(&format!("-K{}", cfg.k_basis));
    let mut report = InequalityReport::new("lemma_l_last1", lhs, rhs, digest);
    report.flag(format!("holder_bound={holder}"));
    if !(lhs <= holder * (1.0 + HOLDER_TOLERANCE)) {
        report.pass = false;
        report.flag(format!("LHS {lhs} exceeds the Hölder bound {holder}"));
    }
    if kernel.residual > 1e-3 {
        report.flag(format!("kernel normalization residual {}", kernel.residual));
    }
    Ok(report)
}

fn sha_digest(cfg: &WhiteNoiseConfig, h0: &Field, xi0: &Field) -> Result<String, WhiteNoiseError> {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(cfg).map_err(crate::verify::VerifyError::from)?);
    for v in h0.values().iter().chain(xi0.values()) {
        h.update(v.to_le_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

/// Runs [`check_lemma_l_last1`] for each basis size in `levels` and
/// requires `|LHS/RHS − 1|` to decrease strictly from level to level
/// (vacuous when the data vanish).
pub fn lemma_l_last1_sweep(
    h0: &Field,
    xi0: &Field,
    cfg: &WhiteNoiseConfig,
    levels: &[usize],
) -> Result<InequalityReport, WhiteNoiseError> {
    if levels.is_empty() {
        return Err(WhiteNoiseError::Config("need at least one basis size".into()));
    }
    let reports = levels
        .iter()
        .map(|&k| check_lemma_l_last1(h0, xi0, &WhiteNoiseConfig { k_basis: k, ..cfg.clone() }))
        .collect::<Result<Vec<_>, _>>()?;
    let degenerate = reports.iter().all(|r| r.rhs == 0.0);
    let mut merged = merge_refinements(reports, RefinementRule::Growth(f64::INFINITY));
    let gaps: Vec<f64> = merged.refinement_series.iter().flatten().map(|r| (r - 1.0).abs()).collect();
    if !degenerate && !gaps.windows(2).all(|w| w[1] < w[0]) {
        merged.pass = false;
        merged.flag(format!("|LHS/RHS − 1| is not decreasing: {gaps:?}"));
    }
    Ok(merged)
}
