//! Equidistant spectra of one-dimensional Schrödinger operators.
//!
//! The crate solves `-½ψ'' + U ψ = ε ψ` on uniform grids, builds the analytic
//! and ODE-generated potential families whose spectra are (nearly) evenly
//! spaced, analyses level spacings and state classes, and runs exact
//! Rayleigh–Schrödinger perturbation theory for polynomial perturbations of
//! the harmonic oscillator.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod exact;
pub mod expfit;
pub mod numerics;
pub mod perturbation;
pub mod potentials;
pub mod shift_ode;
pub mod spectral;
pub mod stats;
pub mod units;

pub use error::{Error, ErrorKind, Result};
pub use numerics::grid::Grid1D;
