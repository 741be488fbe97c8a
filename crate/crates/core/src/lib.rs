//! Algebraic change-point detection.
//!
//! A piecewise polynomial signal that jumps at an unknown instant `t_r` is,
//! in the operational domain, `X = x1 + x2 e^{-t_r s}`. Differential
//! operators in `d/ds` that annihilate the local models `x1` and `x2` turn
//! this into an equation that is polynomial (often linear) in `t_r`. This
//! crate derives those operators exactly ([`algebra`], [`builder`]), turns
//! them into finite-window convolution kernels ([`kernel`]), slides them over
//! sampled data ([`runtime`]), and benchmarks the result against synthetic
//! signals and noises ([`signal`], [`noise`], [`bench`]).
//!
//! ```
//! use algebraic_changepoint::{builder::{ModelSpec, build_detector_linear},
//!     kernel::{kernelize, discretize, Quadrature}};
//!
//! let det = build_detector_linear(&ModelSpec::step()).unwrap();
//! let kernel = kernelize(&det).unwrap();
//! assert_eq!(kernel.kernels()[1].to_string(), "T - 2*tau");
//! let disc = discretize(&kernel, 64, 0.01, Quadrature::Trapezoid).unwrap();
//! assert_eq!(disc.weights().len(), 2);
//! ```

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod bench;
pub mod builder;
pub mod config;
pub mod cli;
pub mod csvio;
mod error;
pub mod kernel;
pub mod noise;
pub mod plot;
pub mod runtime;
pub mod signal;

pub use error::{Error, Result};
