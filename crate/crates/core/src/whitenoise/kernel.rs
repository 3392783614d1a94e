use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use super::{WhiteNoiseConfig, WhiteNoiseError};
use crate::quadrature::CompositeRule;
use crate::spectral::{Field, Grid};

/// Trapezoid step in `u = ln t`; the integrand is entire with
/// double-exponential decay, so the rule converges geometrically.
const LOG_STEP: f64 = 0.1;

/// `∫_0^∞ t^{-b} e^{-t x² - 1/(4t)} dt` for `b > 1`.
fn t_integral(x2: f64, b: f64) -> f64 {
    if x2 == 0.0 {
        // t = 1/(4s) turns it into a Gamma integral
        return 4f64.powf(b - 1.0) * statrs::function::gamma::gamma(b - 1.0);
    }
    let lo = -6.0;
    let hi = (80.0 / x2).ln().max(2.0);
    let n = ((hi - lo) / LOG_STEP).ceil() as usize;
    let h = (hi - lo) / n as f64;
    let f = |u: f64| ((1.0 - b) * u - x2 * u.exp() - 0.25 * (-u).exp()).exp();
    let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
    h * (inner + 0.5 * (f(lo) + f(hi)))
}

fn check_order(order: f64) -> Result<(), WhiteNoiseError> {
    if order < 0.0 && order > -1.0 {
        Ok(())
    } else {
        Err(WhiteNoiseError::Exponents(format!("0 > γ+α/2 > −1 fails: γ+α/2 = {order}")))
    }
}

/// `R_γ(x) = |x|^{-(γ+α/2+1)} ∫_0^∞ t^{-(γ+α/2+3)/2} e^{-t x² - 1/(4t)} dt`.
pub fn r_gamma_kernel(x: f64, gamma: f64, alpha: f64) -> Result<f64, WhiteNoiseError> {
    let order = gamma + alpha / 2.0;
    check_order(order)?;
    if x == 0.0 {
        return Err(WhiteNoiseError::SingularPoint);
    }
    Ok(x.abs().powf(-(order + 1.0)) * t_integral(x * x, (order + 3.0) / 2.0))
}

/// `∫_0^b x^{e-1} F(x) dx = (1/e) ∫_0^{b^e} F(y^{1/e}) dy`: the power-law
/// singularity is integrated exactly and `F` is handled by Gauss–Legendre.
fn singular_integral(e: f64, b: f64, smooth: impl Fn(f64) -> f64) -> f64 {
    let rule = CompositeRule::new(0.0, b.powf(e), 16, 8);
    rule.integrate(|y| smooth(y.powf(1.0 / e))) / e
}

/// The kernel `R_γ` for one `(γ, α)` with its spectral normalization:
/// `c R_γ` is the kernel of `(1−Δ)^{(γ+α/2)/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BesselKernel {
    pub gamma: f64,
    pub alpha: f64,
    /// Half-width of the real-line domain of all kernel integrals.
    pub radius: f64,
    /// Fitted on `ξ = 1`.
    pub c: f64,
    /// Largest relative mismatch of `c R̂_γ(ξ)` against `(1+ξ²)^{(γ+α/2)/2}`
    /// over `ξ = 2, …, 8`.
    pub residual: f64,
}

type CacheKey = [u64; 3];

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<BesselKernel>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<BesselKernel>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl BesselKernel {
    /// Shared kernel for `(γ, α, radius)`, built and fitted on first use.
    pub fn cached(gamma: f64, alpha: f64, radius: f64) -> Result<Arc<Self>, WhiteNoiseError> {
        let key = [gamma.to_bits(), alpha.to_bits(), radius.to_bits()];
        let mut map = cache().lock().expect("kernel cache poisoned");
        if let Some(k) = map.get(&key) {
            return Ok(Arc::clone(k));
        }
        let kernel = Arc::new(Self::fit(gamma, alpha, radius)?);
        map.insert(key, Arc::clone(&kernel));
        Ok(kernel)
    }

    pub fn for_config(cfg: &WhiteNoiseConfig) -> Result<Arc<Self>, WhiteNoiseError> {
        Self::cached(cfg.gamma, cfg.alpha, cfg.radius())
    }

    fn fit(gamma: f64, alpha: f64, radius: f64) -> Result<Self, WhiteNoiseError> {
        check_order(gamma + alpha / 2.0)?;
        if !(radius > 1.0) {
            return Err(WhiteNoiseError::Config(format!("kernel radius {radius} must exceed 1")));
        }
        let mut k = Self { gamma, alpha, radius, c: 1.0, residual: 0.0 };
        let freqs: Vec<f64> = (1..=8).map(f64::from).collect();
        let transform = k.fourier(&freqs);
        let order = k.order();
        let target = |xi: f64| (1.0 + xi * xi).powf(order / 2.0);
        k.c = target(1.0) / transform[0];
        k.residual = freqs
            .iter()
            .zip(&transform)
            .skip(1)
            .map(|(xi, t)| (k.c * t / target(*xi) - 1.0).abs())
            .fold(0.0, f64::max);
        Ok(k)
    }

    /// `γ + α/2`.
    pub fn order(&self) -> f64 {
        self.gamma + self.alpha / 2.0
    }

    /// `μ = −(γ+α/2)`; `R_γ(x) ~ |x|^{μ−1}` at the origin.
    fn mu(&self) -> f64 {
        -self.order()
    }

    /// `R_γ(x) |x|^{1−μ}`, finite and continuous at 0.
    fn smooth_factor(&self, x: f64) -> f64 {
        t_integral(x * x, (self.order() + 3.0) / 2.0)
    }

    pub fn eval(&self, x: f64) -> Result<f64, WhiteNoiseError> {
        r_gamma_kernel(x, self.gamma, self.alpha)
    }

    /// `R̂_γ(ξ) = 2 ∫_0^radius R_γ(x) cos(ξx) dx` for each `ξ`.
    pub fn fourier(&self, freqs: &[f64]) -> Vec<f64> {
        let mu = self.mu();
        let split = 1.0f64.min(self.radius);
        let mut out: Vec<f64> = freqs
            .iter()
            .map(|xi| singular_integral(mu, split, |x| self.smooth_factor(x) * (xi * x).cos()))
            .collect();
        let panels = ((self.radius - split) / 0.1).ceil() as usize;
        let rule = CompositeRule::new(split, self.radius, panels.max(1), 8);
        let values: Vec<f64> =
            rule.nodes.iter().map(|&x| x.powf(mu - 1.0) * self.smooth_factor(x)).collect();
        for (o, xi) in out.iter_mut().zip(freqs) {
            *o += rule.weights.iter().zip(&rule.nodes).zip(&values).map(|((w, x), v)| w * v * (xi * x).cos()).sum::<f64>();
        }
        out.iter().map(|v| 2.0 * v).collect()
    }

    /// `∫_a^b |R_γ|^q` for `0 ≤ a < b`; infinite when the singularity at 0 is
    /// not `q`-integrable.
    pub fn power_integral(&self, q: f64, a: f64, b: f64) -> f64 {
        let mu = self.mu();
        let e = q * (mu - 1.0) + 1.0;
        let f = |x: f64| (x.powf(mu - 1.0) * self.smooth_factor(x)).powf(q);
        if a == 0.0 {
            if e <= 0.0 {
                return f64::INFINITY;
            }
            let split = b.min(1.0);
            let near = singular_integral(e, split, |x| self.smooth_factor(x).powf(q));
            if b > split {
                near + self.power_integral(q, split, b)
            } else {
                near
            }
        } else {
            let panels = ((b - a) / 0.1).ceil().max(1.0) as usize;
            CompositeRule::new(a, b, panels, 8).integrate(f)
        }
    }

    /// `‖R_γ‖_q` over `[−radius, radius]`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        (2.0 * self.power_integral(q, 0.0, self.radius)).powf(1.0 / q)
    }

    /// `∫_lo^hi R_γ²` for any interval, clipped to `[−radius, radius]`.
    fn square_between(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (lo.max(-self.radius), hi.min(self.radius));
        if lo >= hi {
            0.0
        } else if lo < 0.0 && hi > 0.0 {
            self.power_integral(2.0, 0.0, -lo) + self.power_integral(2.0, 0.0, hi)
        } else if hi <= 0.0 {
            self.power_integral(2.0, -hi, -lo)
        } else {
            self.power_integral(2.0, lo, hi)
        }
    }

    /// Cell weights `W_m = Σ_n ∫_{cell(mh + nL)} R_γ²` of the periodized
    /// squared kernel, cells of width `h` centred on the offsets.
    pub fn square_weights(&self, grid: &Grid) -> Vec<f64> {
        let (h, l) = (grid.spacing(), grid.length());
        let images = (self.radius / l).ceil() as i64 + 1;
        (0..grid.modes())
            .map(|m| {
                (-images..=images)
                    .map(|n| {
                        let centre = m as f64 * h + n as f64 * l;
                        self.square_between(centre - h / 2.0, centre + h / 2.0)
                    })
                    .sum()
            })
            .collect()
    }
}

/// `h̄(x) = (∫ R_γ²(x−y) ξ₀²(y) h₀²(y) dy)^{1/2}` on the torus, with the
/// product frozen on grid cells and the kernel integrated exactly near 0.
pub fn hbar(h0: &Field, xi0: &Field, cfg: &WhiteNoiseConfig) -> Result<Field, WhiteNoiseError> {
    cfg.require_valid()?;
    let grid = cfg.grid;
    if *h0.grid() != grid || *xi0.grid() != grid {
        return Err(WhiteNoiseError::Config("h₀ and ξ₀ must live on the configured grid".into()));
    }
    let kernel = BesselKernel::for_config(cfg)?;
    let weights = kernel.square_weights(&grid);
    let rho: Vec<f64> = xi0.values().iter().zip(h0.values()).map(|(x, h)| (x * h).powi(2)).collect();
    let n = grid.modes();
    let values = (0..n)
        .map(|i| (0..n).map(|j| weights[(i + n - j) % n] * rho[j]).sum::<f64>().sqrt())
        .collect();
    Ok(Field::new(grid, values)?)
}

/// Writes `x,R_gamma` rows for the given abscissae (none may be 0).
pub fn write_kernel_csv<W: Write>(kernel: &BesselKernel, xs: &[f64], out: W) -> Result<(), WhiteNoiseError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "R_gamma"])?;
    for &x in xs {
        w.write_record([x.to_string(), kernel.eval(x)?.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
