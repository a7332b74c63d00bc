use num_complex::Complex64;

use super::{Grid, ScalarField, SpectralField};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

pub fn forward_transform(f: &ScalarField) -> Result<SpectralField> {
    f.check_finite("forward transform input")?;
    Ok(forward(f))
}

pub fn inverse_transform(f: &SpectralField) -> Result<ScalarField> {
    if !f.is_finite() {
        return Err(crate::KseError::NonFinite {
            what: "inverse transform input".into(),
        });
    }
    Ok(inverse(f))
}

/// Unchecked forward transform for the solver's inner loops.
pub(crate) fn forward(f: &ScalarField) -> SpectralField {
    let grid = f.grid();
    SpectralField::from_coeffs_unchecked(grid, grid.forward(f.values()))
}

pub(crate) fn inverse(f: &SpectralField) -> ScalarField {
    let grid = f.grid();
    ScalarField::from_values_unchecked(grid, grid.inverse(f.coeffs()))
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Multiplies by `(i k_axis)^order`. First derivatives drop the Nyquist
/// mode along the differentiated axis.
pub fn derivative(f: &SpectralField, axis: Axis, order: u32) -> SpectralField {
    assert!(order == 1 || order == 2, "derivative order must be 1 or 2");
    let n = f.grid().n();
    f.map_modes(|k1, k2, i, j, c| {
        let (k, nyq) = match axis {
            Axis::X1 => (k1, 2 * i == n),
            Axis::X2 => (k2, 2 * j == n),
        };
        match order {
            1 if nyq => Complex64::default(),
            1 => I * k * c,
            _ => -k * k * c,
        }
    })
}

/// Spectral gradient `(∂1 f, ∂2 f)`.
pub fn gradient(f: &SpectralField) -> [SpectralField; 2] {
    [derivative(f, Axis::X1, 1), derivative(f, Axis::X2, 1)]
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    f.map_modes(|k1, k2, _, _, c| -(k1 * k1 + k2 * k2) * c)
}

/// Divergence `∂1 a + ∂2 b` of a vector field given by components.
pub fn divergence(a: &SpectralField, b: &SpectralField) -> SpectralField {
    derivative(a, Axis::X1, 1).add(&derivative(b, Axis::X2, 1))
}

/// Recovers the zero-mean, divergence-free velocity whose vorticity
/// `∂1 u2 - ∂2 u1` equals `omega` (after its mean and Nyquist modes are
/// removed): `u = ∇⊥ Δ⁻¹ ω`.
pub fn biot_savart(omega: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = omega.grid();
    let n = grid.n();
    let mut u1 = SpectralField::zeros(grid);
    let mut u2 = SpectralField::zeros(grid);
    {
        let (c1, c2) = (u1.coeffs_mut(), u2.coeffs_mut());
        for (j, row) in omega.coeffs().chunks(n).enumerate() {
            let k2 = grid.k2(j);
            for (i, &w) in row.iter().enumerate() {
                if (i == 0 && j == 0) || grid.is_nyquist(i, j) {
                    continue;
                }
                let k1 = grid.k1(i);
                let inv = 1.0 / (k1 * k1 + k2 * k2);
                c1[j * n + i] = I * k2 * inv * w;
                c2[j * n + i] = -I * k1 * inv * w;
            }
        }
    }
    (u1, u2)
}

/// Two-thirds rule: zero every mode with `max(|f1|, |f2|) > n/3`.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

pub(crate) fn dealias_in_place(f: &mut SpectralField) {
    let grid = f.grid().clone();
    let n = grid.n();
    let cut = n / 3;
    for (j, row) in f.coeffs_mut().chunks_mut(n).enumerate() {
        if j > cut {
            row.fill(Complex64::default());
            continue;
        }
        for (i, c) in row.iter_mut().enumerate() {
            if grid.freq1(i).unsigned_abs() as usize > cut {
                *c = Complex64::default();
            }
        }
    }
}

/// Discrete heat semigroup `exp(ν t Δ)`.
pub fn heat_propagate(f: &SpectralField, nu: f64, t: f64) -> SpectralField {
    assert!(nu >= 0.0 && t >= 0.0, "heat propagator needs nu, t >= 0");
    if nu == 0.0 || t == 0.0 {
        return f.clone();
    }
    f.map_modes(|k1, k2, _, _, c| c * (-nu * (k1 * k1 + k2 * k2) * t).exp())
}

/// Physical-space product of two spectral fields, transformed back and
/// optionally dealiased.
pub(crate) fn product(a: &ScalarField, b: &ScalarField, dealias_on: bool) -> SpectralField {
    let mut p = forward(&a.mul(b));
    if dealias_on {
        dealias_in_place(&mut p);
    }
    p
}

/// Grid quadrature L^q norm; `q = ∞` is the grid maximum of `|f|`.
pub fn lq_norm(f: &ScalarField, q: f64) -> f64 {
    lq_norm_values(f.values(), f.grid(), q)
}

/// L^q norm of the pointwise Euclidean magnitude of a vector (or tensor)
/// field given by its components.
pub fn lq_norm_magnitude(components: &[&ScalarField], q: f64) -> f64 {
    assert!(!components.is_empty());
    let grid = components[0].grid();
    let len = grid.physical_len();
    let mut mag = vec![0.0; len];
    for c in components {
        for (m, v) in mag.iter_mut().zip(c.values()) {
            *m += v * v;
        }
    }
    for m in mag.iter_mut() {
        *m = m.sqrt();
    }
    lq_norm_values(&mag, grid, q)
}

fn lq_norm_values(values: &[f64], grid: &Grid, q: f64) -> f64 {
    assert!(q >= 1.0, "L^q exponent must be >= 1");
    if q.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let sum: f64 = if q == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else if q == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else if q.fract() == 0.0 && q <= 16.0 {
        let p = q as i32;
        values.iter().map(|v| v.abs().powi(p)).sum()
    } else {
        values.iter().map(|v| v.abs().powf(q)).sum()
    };
    (grid.cell_area() * sum).powf(1.0 / q)
}

/// `L² Σ_k w(k) |F_k|²` over the full spectrum.
pub(crate) fn weighted_energy(f: &SpectralField, weight: impl Fn(f64) -> f64) -> f64 {
    let grid = f.grid();
    let n = grid.n();
    let mut total = 0.0;
    for (j, row) in f.coeffs().chunks(n).enumerate() {
        let k2 = grid.k2(j);
        let mut row_sum = 0.0;
        for (i, c) in row.iter().enumerate() {
            let k1 = grid.k1(i);
            row_sum += weight(k1 * k1 + k2 * k2) * c.norm_sqr();
        }
        total += grid.row_weight(j) * row_sum;
    }
    total * grid.area()
}

/// L² norm computed from coefficients (Parseval).
pub fn spectral_l2_norm(f: &SpectralField) -> f64 {
    weighted_energy(f, |_| 1.0).sqrt()
}

/// H^s norm with the multiplier `(1 + |k|²)^s` on squared coefficients.
pub fn sobolev_norm(f: &SpectralField, s: u32) -> f64 {
    sobolev_norm_sq(f, s).sqrt()
}

pub(crate) fn sobolev_norm_sq(f: &SpectralField, s: u32) -> f64 {
    let s = s as i32;
    weighted_energy(f, |k2| (1.0 + k2).powi(s))
}

/// Energy in modes removed by the two-thirds rule, and total energy.
pub(crate) fn tail_energy(f: &SpectralField) -> (f64, f64) {
    let grid = f.grid();
    let n = grid.n();
    let (mut tail, mut total) = (0.0, 0.0);
    for (j, row) in f.coeffs().chunks(n).enumerate() {
        let w = grid.row_weight(j);
        for (i, c) in row.iter().enumerate() {
            let e = w * c.norm_sqr();
            total += e;
            if grid.is_dealiased_out(i, j) {
                tail += e;
            }
        }
    }
    (tail, total)
}
