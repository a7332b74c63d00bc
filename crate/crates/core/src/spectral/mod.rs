//! Periodic grid, Fourier transforms and spectral operators.

mod field;
mod grid;
mod ops;

pub use field::{ScalarField, SpectralField};
pub use grid::Grid;
pub use ops::{
    biot_savart, dealias, derivative, divergence, forward_transform, gradient, heat_propagate,
    inverse_transform, laplacian, lq_norm, lq_norm_magnitude, sobolev_norm, spectral_l2_norm,
    Axis,
};

pub(crate) use ops::{
    forward, inverse, product, sobolev_norm_sq, tail_energy, weighted_energy,
};
