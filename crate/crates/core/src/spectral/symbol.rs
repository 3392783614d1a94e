use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Grid, SpectralError};

/// Which of the four bounded multipliers `η^i_β`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EtaIndex {
    /// `(1+|ξ|²)^{β/2} / (1+|ξ|^β)`
    One,
    /// reciprocal of `One`
    Two,
    /// `|ξ|^β / (1+|ξ|^β)`
    Three,
    /// `|ξ|^β / (1+|ξ|²)^{β/2}`
    Four,
}

impl EtaIndex {
    pub fn from_number(i: u8) -> Option<Self> {
        match i {
            1 => Some(Self::One),
            2 => Some(Self::Two),
            3 => Some(Self::Three),
            4 => Some(Self::Four),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::One => 1,
            Self::Two => 2,
            Self::Three => 3,
            Self::Four => 4,
        }
    }
}

/// Radial Fourier multipliers `m(|ξ|)`.
#[derive(Clone)]
pub enum MultiplierSymbol {
    /// `-|ξ|^β`, i.e. `Δ^{β/2}`.
    FracPower(f64),
    /// `|ξ|^β`, i.e. `(-Δ)^{β/2}`.
    AbsPower(f64),
    /// `(1+|ξ|²)^{μ/2}`.
    Bessel(f64),
    /// `exp(-at |ξ|^α)`.
    Semigroup { at: f64, alpha: f64 },
    Eta { index: EtaIndex, beta: f64 },
    /// Arbitrary radial symbol.
    Radial(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FracPower(b) => write!(f, "FracPower({b})"),
            Self::AbsPower(b) => write!(f, "AbsPower({b})"),
            Self::Bessel(m) => write!(f, "Bessel({m})"),
            Self::Semigroup { at, alpha } => write!(f, "Semigroup(at={at}, alpha={alpha})"),
            Self::Eta { index, beta } => write!(f, "Eta({}, {beta})", index.number()),
            Self::Radial(_) => write!(f, "Radial(..)"),
        }
    }
}

/// `|ξ|^β` with `|0|^β = 0` for `β > 0`.
fn abs_pow(r: f64, beta: f64) -> f64 {
    if r == 0.0 && beta > 0.0 {
        0.0
    } else {
        r.powf(beta)
    }
}

impl MultiplierSymbol {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::FracPower(b) => -abs_pow(r, *b),
            Self::AbsPower(b) => abs_pow(r, *b),
            Self::Bessel(mu) => (1.0 + r * r).powf(mu / 2.0),
            Self::Semigroup { at, alpha } => (-at * abs_pow(r, *alpha)).exp(),
            Self::Eta { index, beta } => {
                let rb = abs_pow(r, *beta);
                let bessel = (1.0 + r * r).powf(beta / 2.0);
                match index {
                    EtaIndex::One => bessel / (1.0 + rb),
                    EtaIndex::Two => (1.0 + rb) / bessel,
                    EtaIndex::Three => rb / (1.0 + rb),
                    EtaIndex::Four => rb / bessel,
                }
            }
            Self::Radial(f) => f(r),
        }
    }

    /// Symbol evaluated at every grid frequency, storage order.
    pub fn table(&self, grid: &Grid) -> Result<Vec<f64>, SpectralError> {
        grid.frequency_magnitudes()
            .into_iter()
            .map(|r| {
                let m = self.eval(r);
                if m.is_finite() {
                    Ok(m)
                } else {
                    Err(SpectralError::SymbolDomain { symbol: format!("{self:?}"), frequency: r })
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_three_and_four_bounded() {
        for beta in [0.5, 1.0, 1.5, 3.0] {
            for r in (0..200).map(|i| i as f64 * 0.37) {
                for idx in [EtaIndex::Three, EtaIndex::Four] {
                    let m = MultiplierSymbol::Eta { index: idx, beta }.eval(r);
                    assert!((0.0..=1.0).contains(&m), "{idx:?} {beta} {r} {m}");
                }
            }
        }
    }

    #[test]
    fn eta_one_two_inverse() {
        for r in [0.0, 0.3, 5.0, 100.0] {
            let a = MultiplierSymbol::Eta { index: EtaIndex::One, beta: 1.3 }.eval(r);
            let b = MultiplierSymbol::Eta { index: EtaIndex::Two, beta: 1.3 }.eval(r);
            assert!((a * b - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn fractional_power_vanishes_at_origin() {
        assert_eq!(MultiplierSymbol::FracPower(0.7).eval(0.0), 0.0);
        assert_eq!(MultiplierSymbol::Semigroup { at: 2.0, alpha: 1.0 }.eval(0.0), 1.0);
    }

    #[test]
    fn nan_symbol_is_rejected() {
        let g = Grid::periodic_1d(8).unwrap();
        let m = MultiplierSymbol::Radial(Arc::new(|r| if r > 2.5 { f64::NAN } else { 1.0 }));
        assert!(matches!(m.table(&g), Err(SpectralError::SymbolDomain { .. })));
        assert!(MultiplierSymbol::AbsPower(-1.0).table(&g).is_err());
    }
}
