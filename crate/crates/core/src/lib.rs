//! Matrix permanents and determinants from a spin-1/2 branching operator.
//!
//! The permanent (bosonic) or determinant (fermionic) of an `n × n` weight
//! matrix is the vacuum-to-vacuum amplitude of `n` applications of a sparse
//! operator on `n` spin-1/2 sites. Evaluating it level by level costs
//! `n · 2ⁿ` operations, the same as Gray-code Ryser.

pub mod basis;
pub mod cli;
pub mod bench;
pub mod combinadic;
pub mod dense;
pub mod error;
pub mod exec;
pub mod graph;
pub mod matrix;
pub mod opcount;
pub mod oracle;
pub mod reduction;
pub mod scalar;
pub mod selftest;
pub mod spectral;
pub mod spin;

pub use basis::BasisState;
pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use exec::Execution;
pub use matrix::{random_matrix, MatrixFormat, RandomKind, SquareMatrix};
pub use opcount::OpCount;
pub use scalar::{Exact, Scalar};
pub use spin::{LevelVector, SpinOperator, Statistics, Variant};
