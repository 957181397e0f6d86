//! Numerical laboratory for log-correlated Gaussian fields and the
//! exponential (first-passage) metrics built from them on periodic grids.
//!
//! The crate covers the full pipeline: seed bump -> mollification kernel ->
//! field sampling (white-noise layers or spectral synthesis) -> exponential
//! weight grids -> shortest-path distance queries -> exponent, moment,
//! Hoelder, thick-point and KPZ experiments, plus drifted-Gaussian tail
//! utilities used as independent oracles.

pub mod field;
pub mod metric;
pub mod kernel;
pub mod numerics;
pub mod rng;
