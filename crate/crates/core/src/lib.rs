//! Numerical laboratory for the compressible primitive equations with
//! vertical diffusion on the channel `T^2 x (0, 1)`.
//!
//! The crate is layered bottom-up: grid and field storage, spectral
//! operators, diagnostic fields, tendencies, linear parabolic solves, time
//! integrators, analysis experiments, and configuration / file I/O.

pub mod analysis;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod initial;
pub mod integrators;
pub mod io;
pub mod par;
pub mod parabolic;
pub mod params;
pub mod spectral;
pub mod tendencies;

pub use error::{CpeError, Result};
pub use field::{Parity, ScalarField2D, ScalarField3D, State, VectorField3D2C};
pub use grid::Grid;
pub use params::PhysParams;
