//! Numerical spectral analysis of the channel operator
//! `H = -∂²x - ∂²y + ω²y² - λy²V(xy)` on `ℝ²`.
//!
//! The crate discretizes `H` and its one-dimensional comparison operator
//! `L = -d²/dx² + ω² - λV(x)`, classifies the coupling regime from
//! `γ₀ = inf σ(L)`, builds quasimode certificates for spectral points, and
//! evaluates a moment bound on the discrete spectrum below `ω`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis1d;
pub mod assembly;
pub mod certificates;
pub mod config;
pub mod eigen;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod model;
pub mod momentbound;
pub mod par;
pub mod quadrature;
pub mod report;
pub mod sparse;

pub use error::{Error, Result};
