//! Exact normal-mode analysis of multi-terminal converter graphs.
//!
//! The core is generic over the scalar type (`f32`, `f64` or exact
//! [`Rational`]); the aliases below pin the common instantiations.

pub mod catalog;
pub mod classify;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod io;
pub mod loops;
pub mod power;
pub mod ratmat;
pub mod scalar;
pub mod simulate;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};
pub use ratmat::Matrix;
pub use scalar::{Rational, Scalar};
pub use topology::Topology;

pub type RationalMatrix = Matrix<Rational>;
pub type FloatMatrix = Matrix<f64>;
