//! Dissipatively coupled SSH lattices.

pub mod circuit;
pub mod edgeskin;
pub mod eigen;
pub mod error;
pub mod hamiltonians;
pub mod matrix;
pub mod photonic;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, C64};
