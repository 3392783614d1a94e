use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use super::{Grid, SpectralError};

/// Real grid function on a periodic torus.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self, SpectralError> {
        let values = (0..grid.len()).map(|i| f(&grid.coordinates(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn to_spectral(&self) -> SpectralField {
        SpectralField { grid: self.grid, coeffs: self.grid.forward(&self.values) }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, SpectralError> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self, SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch);
        }
        Self::new(self.grid, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn add(&self, other: &Field) -> Result<Self, SpectralError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Self, SpectralError> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Result<Self, SpectralError> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Rectangle-rule integral over the torus.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    /// Trigonometric interpolation onto another resolution of the same torus.
    /// Wavenumbers not representable on both grids (including Nyquist) are
    /// dropped, so resampling a band-limited field is exact.
    pub fn resample(&self, target: Grid) -> Result<Self, SpectralError> {
        if target.dim() != self.grid.dim() || target.length() != self.grid.length() {
            return Err(SpectralError::GridMismatch);
        }
        let src = self.grid.forward(&self.values);
        let limit = (self.grid.modes().min(target.modes()) / 2) as i64;
        let n = target.modes() as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); target.len()];
        for (flat, c) in src.into_iter().enumerate() {
            let ks: Vec<i64> =
                self.grid.unflatten(flat).into_iter().map(|j| self.grid.index_wavenumber(j)).collect();
            if ks.iter().any(|k| k.abs() >= limit) {
                continue;
            }
            let dest = ks.iter().fold(0usize, |acc, k| acc * target.modes() + k.rem_euclid(n) as usize);
            out[dest] = c;
        }
        Ok(Self { grid: target, values: target.inverse(&out) })
    }

    /// Rectangle-rule `L_p` norm; `p = ∞` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm_of(&self.grid, &self.values, p)
    }
}

pub(crate) fn lp_norm_of(grid: &Grid, values: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let sum: f64 = if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    };
    (grid.cell_volume() * sum).powf(1.0 / p)
}

/// Fourier coefficients of a grid function, FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::LengthMismatch { expected: grid.len(), got: coeffs.len() });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Multiplies coefficient `i` by `table[i]`.
    pub fn scale_by(&mut self, table: &[f64]) {
        self.coeffs.iter_mut().zip(table).for_each(|(c, &m)| *c *= m);
    }

    pub fn to_field(&self) -> Result<Field, SpectralError> {
        Field::new(self.grid, self.grid.inverse(&self.coeffs))
    }

    /// Checks `c(-ξ) = conj(c(ξ))` up to `tol` (absolute).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.grid.modes();
        (0..self.coeffs.len()).all(|flat| {
            let mirror = self
                .grid
                .unflatten(flat)
                .into_iter()
                .fold(0, |acc, j| acc * n + (n - j) % n);
            (self.coeffs[flat] - self.coeffs[mirror].conj()).norm() <= tol
        })
    }
}

/// Family `g = (g^1, ..., g^K)` of fields on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldStack {
    grid: Grid,
    components: Vec<Field>,
}

impl FieldStack {
    pub fn new(components: Vec<Field>) -> Result<Self, SpectralError> {
        let first = components
            .first()
            .ok_or_else(|| SpectralError::InvalidArgument("field stack needs at least one component".into()))?;
        let grid = *first.grid();
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(SpectralError::GridMismatch);
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: Grid, count: usize) -> Self {
        Self { grid, components: vec![Field::zeros(grid); count.max(1)] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn count(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Field] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &Field {
        &self.components[k]
    }

    pub fn into_components(self) -> Vec<Field> {
        self.components
    }

    /// Pointwise `(Σ_k |g^k(x)|²)^{1/2}`.
    pub fn ell2_magnitude(&self) -> Field {
        let mut acc = vec![0.0; self.grid.len()];
        for c in &self.components {
            acc.iter_mut().zip(c.values()).for_each(|(a, v)| *a += v * v);
        }
        Field { grid: self.grid, values: acc.into_iter().map(f64::sqrt).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Field::is_zero)
    }
}

/// Band-limited Gaussian random field: i.i.d. Gaussian Fourier coefficients
/// on integer wavenumbers `|k| <= N/4` (Hermitian, so the field is real),
/// zero above.
pub fn random_band_limited<R: Rng + ?Sized>(grid: Grid, rng: &mut R) -> Field {
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
    let mut coeffs = grid.forward(&noise);
    let cutoff = grid.modes() as f64 / 4.0;
    for (c, k) in coeffs.iter_mut().zip(grid.index_magnitudes()) {
        if k > cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    Field { grid, values: grid.inverse(&coeffs) }
}

/// Band-limited Gaussian random field on the integer wavenumbers
/// `|k| <= cutoff`. Coefficients are drawn in lattice order of `k`, so the
/// same generator state yields the same continuum field on every grid with
/// `N/2 > cutoff`; wavenumbers the grid cannot represent are drawn but dropped.
pub fn random_band_limited_with_cutoff<R: Rng + ?Sized>(grid: Grid, cutoff: f64, rng: &mut R) -> Field {
    let n = grid.modes() as i64;
    let c = cutoff.max(0.0).floor() as i64;
    let flat = |k: &[i64]| k.iter().fold(0usize, |acc, &ki| acc * grid.modes() + ki.rem_euclid(n) as usize);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut k = vec![-c; grid.dim()];
    loop {
        // the sign of the leading non-zero component picks one of each ±k pair
        let lead = k.iter().copied().find(|v| *v != 0).unwrap_or(0);
        let mag2 = k.iter().map(|v| (v * v) as f64).sum::<f64>();
        if lead >= 0 && mag2 <= cutoff * cutoff {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if k.iter().all(|v| 2 * v.abs() < n) {
                if lead == 0 {
                    coeffs[0] = Complex64::new(re, 0.0);
                } else {
                    let z = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                    coeffs[flat(&k)] = z;
                    let neg: Vec<i64> = k.iter().map(|v| -v).collect();
                    coeffs[flat(&neg)] = z.conj();
                }
            }
        }
        let mut axis = k.len();
        loop {
            if axis == 0 {
                return Field { grid, values: grid.inverse(&coeffs) };
            }
            axis -= 1;
            if k[axis] < c {
                k[axis] += 1;
                break;
            }
            k[axis] = -c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_non_finite_and_wrong_length() {
        let g = Grid::periodic_1d(8).unwrap();
        assert_eq!(Field::new(g, vec![0.0; 7]), Err(SpectralError::LengthMismatch { expected: 8, got: 7 }));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert_eq!(Field::new(g, v), Err(SpectralError::NonFinite(3)));
    }

    #[test]
    fn constant_lp_norm() {
        let g = Grid::new(1, 16, 3.0).unwrap();
        let u = Field::constant(g, -2.0);
        for p in [1.0, 2.0, 3.5] {
            assert!((u.lp_norm(p) - 2.0 * 3.0f64.powf(1.0 / p)).abs() < 1e-12);
        }
        assert_eq!(u.lp_norm(f64::INFINITY), 2.0);
    }

    #[test]
    fn random_field_is_band_limited_and_real() {
        let g = Grid::periodic_1d(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_band_limited(g, &mut rng);
        let s = u.to_spectral();
        assert!(s.is_hermitian(1e-13));
        for (c, k) in s.coeffs().iter().zip(g.index_magnitudes()) {
            if k > 16.0 {
                assert!(c.norm() < 1e-13);
            }
        }
        assert!(u.lp_norm(2.0) > 0.0);
    }

    #[test]
    fn resample_is_exact_for_band_limited_fields() {
        let g = Grid::periodic_1d(16).unwrap();
        let u = Field::from_fn(g, |x| 1.0 + (3.0 * x[0]).sin() - 0.5 * (5.0 * x[0]).cos()).unwrap();
        let fine = u.resample(g.refined()).unwrap();
        let exact = Field::from_fn(g.refined(), |x| 1.0 + (3.0 * x[0]).sin() - 0.5 * (5.0 * x[0]).cos()).unwrap();
        assert!(fine.sub(&exact).unwrap().sup_norm() < 1e-13);
        assert!(fine.resample(g).unwrap().sub(&u).unwrap().sup_norm() < 1e-13);
        assert!(u.resample(Grid::new(1, 16, 1.0).unwrap()).is_err());
    }

    #[test]
    fn stack_magnitude() {
        let g = Grid::periodic_1d(8).unwrap();
        let a = Field::constant(g, 3.0);
        let b = Field::constant(g, 4.0);
        let s = FieldStack::new(vec![a, b]).unwrap();
        assert!(s.ell2_magnitude().values().iter().all(|&v| (v - 5.0).abs() < 1e-15));
        assert!(FieldStack::new(vec![]).is_err());
    }

    #[test]
    fn cutoff_fields_do_not_depend_on_resolution() {
        for dim in [1, 2] {
            let coarse = Grid::new(dim, 16, 5.0).unwrap();
            let fine = coarse.refined();
            let a = random_band_limited_with_cutoff(coarse, 3.0, &mut ChaCha8Rng::seed_from_u64(8));
            let b = random_band_limited_with_cutoff(fine, 3.0, &mut ChaCha8Rng::seed_from_u64(8));
            let diff = a.resample(fine).unwrap().sub(&b).unwrap().sup_norm();
            assert!(diff < 1e-12 * b.sup_norm(), "dim {dim}: {diff}");
            assert!(a.to_spectral().is_hermitian(1e-12));
            assert!(a.to_spectral().coeffs().iter().zip(coarse.index_magnitudes()).all(|(c, k)| k <= 3.0 || c.norm() < 1e-12));
        }
    }
}
