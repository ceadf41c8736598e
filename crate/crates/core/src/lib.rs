//! Common zeros of Laplace eigenfunctions on the circle and the 2-sphere.
//!
//! * [`harmonics`]: orthonormal eigenbases, gradients, zonal functions.
//! * [`zerofinder`]: the finite set of common zeros of `n` eigenfunctions.
//! * [`integralgeom`]: Monte Carlo averages over random subspaces and the
//!   Crofton nodal-length estimator.
//! * [`embedding`]: radius, dilation, covering degree and image volume of
//!   the equivariant map into eigenfunction space.
//! * [`cli`]: report records and the command-line driver.

// `!(x > 0.0)` is used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod embedding;
pub mod error;
pub mod harmonics;
pub mod integralgeom;
pub mod quadrature;
pub mod sphere;
pub mod zerofinder;

pub use error::{Error, Result};
pub use harmonics::{build_basis, CoefficientVector, HarmonicBasis};
pub use sphere::SpherePoint;
