//! Low-rank tensor recovery in Tucker and tensor-train formats.
//!
//! Dense tensors use co-lexicographic layout (first index fastest) and
//! 0-based multi-indices throughout the API.

pub mod bench;
pub mod decomposition;
pub mod error;
pub mod linalg;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{DenseTensor, Matrix, Shape};
pub mod generate;
pub mod manifold;
pub mod measurement;
pub mod recovery;
