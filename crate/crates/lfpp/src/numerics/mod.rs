//! Shared numerical machinery: special functions, quadrature, interpolation,
//! and the small statistics toolbox used by the experiment pipelines.

pub mod bessel;
pub mod interp;
pub mod quadrature;
pub mod special;
pub mod stats;
