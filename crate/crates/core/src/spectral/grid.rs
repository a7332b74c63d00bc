use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{KseError, Result};

/// Uniform periodic grid on the torus `[0, L)^2` with `n` points per axis.
///
/// Physical samples are stored row-major with the first axis (x1) as the
/// slow index: `values[i1 * n + i2] = f(i1 * dx, i2 * dx)`.
///
/// Spectral coefficients use the real-to-complex half layout: `n/2 + 1`
/// rows indexed by the non-negative x2 frequency `j`, each holding `n`
/// entries indexed by the x1 frequency slot `i` (standard FFT ordering,
/// slot `i > n/2` is frequency `i - n`). Entry `[j * n + i]`.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    n: usize,
    length: f64,
    dx: f64,
    /// Angular wavenumber per x1 slot.
    k1: Vec<f64>,
    /// Angular wavenumber per x2 row.
    k2: Vec<f64>,
    plans: Plans,
}

struct Plans {
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(KseError::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 8"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(KseError::InvalidGrid(format!(
                "period length {length} must be positive and finite"
            )));
        }
        let scale = 2.0 * std::f64::consts::PI / length;
        let k1 = (0..n).map(|i| scale * signed_freq(i, n) as f64).collect();
        let k2 = (0..=n / 2).map(|j| scale * j as f64).collect();

        let mut real_planner = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::<f64>::new();
        let plans = Plans {
            r2c: real_planner.plan_fft_forward(n),
            c2r: real_planner.plan_fft_inverse(n),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        };
        Ok(Grid {
            inner: Arc::new(GridInner {
                n,
                length,
                dx: length / n as f64,
                k1,
                k2,
                plans,
            }),
        })
    }

    /// Grid on the default `2π` torus.
    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * std::f64::consts::PI)
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    /// Area element of one grid cell.
    pub fn cell_area(&self) -> f64 {
        self.inner.dx * self.inner.dx
    }

    pub fn area(&self) -> f64 {
        self.inner.length * self.inner.length
    }

    /// Number of stored x2 frequency rows (`n/2 + 1`).
    pub fn spectral_rows(&self) -> usize {
        self.inner.n / 2 + 1
    }

    pub fn physical_len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn spectral_len(&self) -> usize {
        self.spectral_rows() * self.inner.n
    }

    /// Coordinate of grid index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.inner.dx
    }

    /// Angular wavenumber for x1 slot `i`.
    pub fn k1(&self, i: usize) -> f64 {
        self.inner.k1[i]
    }

    /// Angular wavenumber for x2 row `j`.
    pub fn k2(&self, j: usize) -> f64 {
        self.inner.k2[j]
    }

    pub fn k1_all(&self) -> &[f64] {
        &self.inner.k1
    }

    /// Signed integer frequency of x1 slot `i`.
    pub fn freq1(&self, i: usize) -> i64 {
        signed_freq(i, self.inner.n)
    }

    /// Weight of row `j` when summing over the full conjugate-symmetric
    /// spectrum from the stored half.
    pub fn row_weight(&self, j: usize) -> f64 {
        if j == 0 || 2 * j == self.inner.n {
            1.0
        } else {
            2.0
        }
    }

    /// True if slot `i` or row `j` carries a Nyquist frequency.
    pub fn is_nyquist(&self, i: usize, j: usize) -> bool {
        2 * i == self.inner.n || 2 * j == self.inner.n
    }

    /// Largest absolute integer frequency of the mode at `(i, j)`.
    pub fn max_freq(&self, i: usize, j: usize) -> u64 {
        self.freq1(i).unsigned_abs().max(j as u64)
    }

    /// Modes with `3 * max_freq > n` are removed by the two-thirds rule.
    pub fn is_dealiased_out(&self, i: usize, j: usize) -> bool {
        3 * self.max_freq(i, j) > self.inner.n as u64
    }

    pub(crate) fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }

    /// Forward transform of physical samples into normalised Fourier-series
    /// coefficients: `F_k = n^-2 Σ f(x) e^{-i k·x}`.
    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.inner.n;
        let rows = self.spectral_rows();
        let plans = &self.inner.plans;

        // Real transform along x2 (contiguous) for every x1 row.
        let mut half = vec![Complex64::default(); n * rows];
        half.par_chunks_mut(rows)
            .zip(values.par_chunks(n))
            .for_each_init(
                || (vec![0.0; n], plans.r2c.make_scratch_vec()),
                |(input, scratch), (out, row)| {
                    input.copy_from_slice(row);
                    plans
                        .r2c
                        .process_with_scratch(input, out, scratch)
                        .expect("r2c buffer sizes match plan");
                },
            );

        let mut coeffs = transpose(&half, n, rows);
        let norm = 1.0 / (n * n) as f64;
        coeffs.par_chunks_mut(n).for_each_init(
            || vec![Complex64::default(); plans.fwd.get_inplace_scratch_len()],
            |scratch, row| {
                plans.fwd.process_with_scratch(row, scratch);
                for c in row.iter_mut() {
                    *c *= norm;
                }
            },
        );
        coeffs
    }

    /// Inverse of [`Grid::forward`]. Imaginary parts that must vanish for a
    /// real field (zero and Nyquist x2 frequency in each x1 row) are dropped.
    pub(crate) fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let n = self.inner.n;
        let rows = self.spectral_rows();
        let plans = &self.inner.plans;

        let mut work = coeffs.to_vec();
        work.par_chunks_mut(n).for_each_init(
            || vec![Complex64::default(); plans.inv.get_inplace_scratch_len()],
            |scratch, row| plans.inv.process_with_scratch(row, scratch),
        );

        let mut half = transpose(&work, rows, n);
        let mut values = vec![0.0; n * n];
        values
            .par_chunks_mut(n)
            .zip(half.par_chunks_mut(rows))
            .for_each_init(
                || plans.c2r.make_scratch_vec(),
                |scratch, (out, row)| {
                    row[0].im = 0.0;
                    row[rows - 1].im = 0.0;
                    plans
                        .c2r
                        .process_with_scratch(row, out, scratch)
                        .expect("c2r buffer sizes match plan");
                },
            );
        values
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n && self.inner.length == other.inner.length
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

fn signed_freq(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Transpose a row-major `rows x cols` matrix into `cols x rows`.
fn transpose<T: Copy + Default + Send + Sync>(src: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut dst = vec![T::default(); rows * cols];
    const BLOCK: usize = 32;
    dst.par_chunks_mut(rows * BLOCK.min(cols))
        .enumerate()
        .for_each(|(b, chunk)| {
            let c0 = b * BLOCK.min(cols);
            let ncols = chunk.len() / rows;
            for r0 in (0..rows).step_by(BLOCK) {
                let r1 = (r0 + BLOCK).min(rows);
                for dc in 0..ncols {
                    let c = c0 + dc;
                    for r in r0..r1 {
                        chunk[dc * rows + r] = src[r * cols + c];
                    }
                }
            }
        });
    dst
}
