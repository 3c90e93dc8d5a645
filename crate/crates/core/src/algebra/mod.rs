//! Field-generic exact and multi-precision linear algebra, and matrices
//! over the Laurent ring in the spectral parameter.

pub mod eigen;
pub mod laurent;
pub mod matrix;
pub mod scalar;

pub use laurent::{char_poly_ring, det_ring, LaurentMatrix, LaurentPoly};
pub use matrix::{dot, independent, norm2, nullspace_covector, Matrix};
pub use scalar::{cf, q, FloatScalar, Ring, RootBranch, Scalar, DEFAULT_PRECISION};
