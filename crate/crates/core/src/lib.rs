//! Asymptotic pricing of European options under exponential Lévy models whose
//! volatility and jump intensity are driven by a fast mean-reverting factor.
//!
//! The price is approximated as `u0 + eps * u1`, where `u0` is the price under
//! the averaged Lévy triplet and `eps * u1` is a first-order correction
//! governed by four group parameters. Both terms are generalized Fourier
//! integrals evaluated along a horizontal contour in the complex plane.
//!
//! The crate is `no_std` (with `alloc`); file formats, simulation and the
//! command line live in the companion `fastlevy` crate.
#![no_std]
// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod calibration;
pub mod error;
pub mod groups;
pub mod levy;
pub mod multiscale;
pub mod pricing;
pub mod quadrature;
pub mod special;
pub mod volatility;

pub use error::{Error, Result};
pub use levy::LevyMeasure;
pub use pricing::{Contour, ModelParams, OptionKind, OptionSpec};

/// Complex numbers used throughout.
pub type C64 = num_complex::Complex<f64>;
