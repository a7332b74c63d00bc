//! Pseudo-spectral solver for the consumption-type Keller–Segel system
//! coupled to incompressible Euler (or Navier–Stokes) flow on the periodic
//! torus, with a priori estimate auditing and a Picard local solver.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod initial;
pub mod model;
pub mod picard;
pub mod run;
pub mod snapshot;
pub mod spectral;
pub mod timestepper;

pub use error::{KseError, Result};
pub use model::{Params, State};
pub use spectral::{Grid, ScalarField, SpectralField};
