use num_complex::Complex64;

use super::Grid;
use crate::error::{KseError, Result};

/// Real samples of a scalar quantity on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

/// Fourier coefficients of a real field in the half-spectrum layout
/// described on [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![0.0; grid.physical_len()],
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        ScalarField {
            grid: grid.clone(),
            values: vec![value; grid.physical_len()],
        }
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for i1 in 0..n {
            let x1 = grid.coord(i1);
            for i2 in 0..n {
                values.push(f(x1, grid.coord(i2)));
            }
        }
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.physical_len() {
            return Err(KseError::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.physical_len(),
                values.len()
            )));
        }
        let field = ScalarField {
            grid: grid.clone(),
            values,
        };
        field.check_finite("field samples")?;
        Ok(field)
    }

    pub(crate) fn from_values_unchecked(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.physical_len());
        ScalarField {
            grid: grid.clone(),
            values,
        }
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

    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.grid.n() + i2]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(KseError::NonFinite {
                what: what.to_string(),
            })
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(self.grid.same_as(&other.grid), "grid mismatch");
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Quadrature of the field over the torus.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.spectral_len()],
        }
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.spectral_len() {
            return Err(KseError::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.spectral_len(),
                coeffs.len()
            )));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub(crate) fn from_coeffs_unchecked(grid: &Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.spectral_len());
        SpectralField {
            grid: grid.clone(),
            coeffs,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at x1 slot `i`, x2 row `j`.
    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        self.coeffs[j * self.grid.n() + i]
    }

    /// Coefficient for signed integer frequencies `(f1, f2)`, reconstructed
    /// from conjugate symmetry when `f2 < 0`.
    pub fn mode(&self, f1: i64, f2: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        let (f1, f2, conj) = if f2 < 0 { (-f1, -f2, true) } else { (f1, f2, false) };
        if f2 > n / 2 || f1 > n / 2 || f1 < -(n / 2) {
            return Complex64::default();
        }
        let i = f1.rem_euclid(n) as usize;
        let c = self.coeff(i, f2 as usize);
        if conj {
            c.conj()
        } else {
            c
        }
    }

    /// Mean value of the represented field.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn set_mean(&mut self, value: f64) {
        self.coeffs[0] = Complex64::new(value, 0.0);
    }

    /// Applies `f(k1, k2, i, j, coeff)` to every stored mode.
    pub fn map_modes(&self, f: impl Fn(f64, f64, usize, usize, Complex64) -> Complex64) -> Self {
        let grid = &self.grid;
        let n = grid.n();
        let mut coeffs = self.coeffs.clone();
        for (j, row) in coeffs.chunks_mut(n).enumerate() {
            let k2 = grid.k2(j);
            for (i, c) in row.iter_mut().enumerate() {
                *c = f(grid.k1(i), k2, i, j, *c);
            }
        }
        SpectralField {
            grid: grid.clone(),
            coeffs,
        }
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// `self + s * other`, in place.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        assert!(self.grid.same_as(&other.grid), "grid mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    pub fn zip_with(
        &self,
        other: &SpectralField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Self {
        assert!(self.grid.same_as(&other.grid), "grid mismatch");
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Projects the field onto `grid`, zero-padding or truncating modes by
    /// frequency. Nyquist modes of the source are dropped when refining.
    pub fn resample(&self, grid: &Grid) -> SpectralField {
        if self.grid == *grid {
            return self.clone();
        }
        let limit = self.grid.n().min(grid.n()) as i64;
        let mut out = SpectralField::zeros(grid);
        for j in 0..grid.spectral_rows() {
            let f2 = j as i64;
            if 2 * f2 >= limit {
                break;
            }
            for i in 0..grid.n() {
                let f1 = grid.freq1(i);
                if 2 * f1.abs() < limit {
                    out.coeffs[j * grid.n() + i] = self.mode(f1, f2);
                }
            }
        }
        out
    }
}
