//! Lifted convex relaxations of nonconvex quadratically constrained
//! quadratic programs: instance model, constraint decomposition, the lifted
//! conic IR, relaxation builders, dominance residuals and a brute-force
//! oracle for tiny instances.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod decompose;
pub mod dominance;
pub mod lift;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod relax;
