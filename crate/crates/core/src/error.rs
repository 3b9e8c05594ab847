use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by pricing, inversion and calibration routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input lies outside the domain of the operation (strip violation,
    /// price outside arbitrage bounds, invalid parameter).
    #[error("domain error: {0}")]
    Domain(String),
    /// A Lévy measure violates one or more admissibility conditions.
    #[error("inadmissible measure: {}", .0.join("; "))]
    Inadmissible(Vec<String>),
    /// A computation produced a non-finite value or failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The Fourier quadrature did not converge within its node budget.
    #[error("quadrature did not converge (L = {half_width}, n = {nodes}); try L >= {suggested_half_width}, n >= {suggested_nodes}")]
    Quadrature { half_width: f64, nodes: usize, suggested_half_width: f64, suggested_nodes: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(alloc::format!($($arg)*)) };
}
macro_rules! numeric {
    ($($arg:tt)*) => { $crate::error::Error::Numeric(alloc::format!($($arg)*)) };
}
pub(crate) use {domain, numeric};
