//! Benchmark harness: instance generation, ladder comparison, dominance
//! verification, sweeps and report rendering.

pub mod compare;
pub mod generate;
pub mod report;
pub mod sweep;
pub mod verify;
