//! Blocked hyperbolic Householder Cholesky updates and their use in
//! re-factoring the Riccati recursion of linear-quadratic optimal control.
//!
//! - [`matrix`]: column-major storage, triangular factors, signed diagonals.
//! - [`oracle`]: scalar reference routines used to check everything else.
//! - [`hyh`]: reflectors, the compact WY block update/apply kernels and the
//!   blocked update driver.
//! - [`riccati`]: factorization, low-rank factorization update and Newton
//!   step solve for the stagewise OCP system.
//! - [`probgen`]: seeded generators for test and benchmark instances.
//! - [`instance`]: on-disk container for persisted instances.

// `!(x > 0.0)` is how NaN pivots get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dense;
pub mod error;
pub mod hyh;
pub mod instance;
pub mod matrix;
pub mod oracle;
pub mod probgen;
pub mod riccati;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, SignedDiagonal, TriFactor};
