//! Lattice-point counting in hyperbolic circles for `PSL(2,Z)`.
//!
//! The geometry, quadrature and special-function layers are generic over [`scalar::Real`];
//! orbit enumeration, kernels, trace-formula terms and experiments work in `f64`.

pub mod error;
pub mod experiments;
pub mod geodesics;
pub mod geometry;
pub mod kernels;
pub mod modular_group;
pub mod quadrature;
pub mod scalar;
pub mod specfun;
pub mod spectral;
pub mod traceformula;

pub use error::{Error, Result};

/// A point of the upper half-plane in double precision.
pub type Point = geometry::Point<f64>;
/// A real Möbius map in double precision.
pub type MobiusMatrix = geometry::MobiusMatrix<f64>;
/// Spectral parameter `t` in double precision.
pub type SpectralParameter = specfun::SpectralParameter<f64>;
/// Complex scalar used throughout.
pub type Complex = num_complex::Complex64;
