//! Bootstrap algebraic multigrid solver library.
//!
//! Builds multilevel solvers for sparse SPD systems from the matrix alone:
//! compatible-relaxation coarsening guided by algebraic distances,
//! least-squares interpolation fit to test vectors, and bootstrap setup
//! cycles that refine the test vectors with a multilevel generalized
//! eigensolver. A benchmark runner reproduces convergence-rate tables on
//! model diffusion problems.

pub mod coarsening;
pub mod dense;
pub mod error;
pub mod hierarchy;
pub mod interp;
pub mod mm;
pub mod partition;
pub mod problems;
pub mod smoothing;
pub mod sparse;

pub use error::{Error, Result};
pub use partition::Partition;
pub use sparse::{SparseMatrix, Vector};
