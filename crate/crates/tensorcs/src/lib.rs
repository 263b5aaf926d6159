//! Tensor compressive sensing toolkit.
//!
//! Jointly optimizes multilinear sensing matrices and multidimensional
//! sparsifying dictionaries, reconstructs sparse tensors through
//! Kronecker-structured operators, and provides a benchmark harness with a
//! CLI for synthetic and image-patch experiments.

pub mod bench;
pub mod design;
pub mod dict;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod recon;
pub mod tensor;

/// Dense real matrix, column-major.
pub type Matrix = nalgebra::DMatrix<f64>;

pub use error::{Error, Result};
pub use tensor::{kron, Tensor};
