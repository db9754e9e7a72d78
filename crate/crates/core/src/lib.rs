//! Numerical laboratory for small-time heat-trace expansions of fractional
//! Schrödinger operators `(-Δ)^{α/2} + V`.

// Tables carry their published digits; `!(x > 0.0)` is how NaN gets rejected.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
mod bessel;
pub mod coefficients;
pub mod config;
pub mod error;
pub mod heat_kernel;
pub mod mc;
pub mod potential;
pub mod quadrature;
pub mod rng;
pub mod runner;
pub mod special;
pub mod subordinator;
pub mod trace_oracle;

pub use error::{Error, Result};
