//! Std companion of `qrelax-core`: the Clarabel backend, the JSON instance
//! format, CBF export, the benchmark harness and the command line.

// Links the system BLAS/LAPACK used by the PSD cone.
use openblas_src as _;

pub mod backend;
pub mod bench;
pub mod cli;
pub mod error;
pub mod export;
pub mod fixtures;
pub mod format;
pub mod solve;

pub use error::Error;
