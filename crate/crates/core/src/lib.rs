//! Numerical toolkit for higher-order Schrodinger operators `L = P(D) + V` on a periodic box.
//!
//! Potential classes, Bessel-potential bounds, resolvents and the heat semigroup `e^{-tL}`
//! (spectral, dense and contour routes) with envelope fits for its kernel. The `run` module
//! drives the `schechter-heat` binary.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod config;
pub mod error;
pub mod fit;
pub mod grid;
pub mod heat;
pub mod report;
pub mod resolvent;
pub mod run;
pub mod schechter;
pub mod symbol;
pub mod toperator;

pub use error::{Error, Result};
