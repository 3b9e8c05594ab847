//! File formats, Monte Carlo verification and the command-line front end for
//! [`fastlevy_core`].
//!
//! The pricing, calibration and group-parameter modules of the core crate are
//! re-exported here.

// `!(x > 0.0)` rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod montecarlo;

pub use error::{Error, Result};
pub use fastlevy_core::{calibration, groups, levy, multiscale, pricing, quadrature, special, volatility, C64};

use fastlevy_core::calibration::Executor;
use rayon::prelude::*;

/// [`Executor`] backed by the rayon thread pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl Executor for Parallel {
    fn map(&self, n: usize, f: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        (0..n).into_par_iter().map(f).collect()
    }
}
