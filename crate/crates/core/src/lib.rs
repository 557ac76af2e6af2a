//! Exact finite-depth constructions of thin sets on the line.
//!
//! * [`scale_chain`]: the tower `q_i = 2^{e_i}` with multipliers, gauge values
//!   and dyadic radii, plus regime classification.
//! * [`sparse_dyadic`]: the number type, `Σ c · 2^{-f}` with big exponents.
//! * [`falconer_set`]: membership, windows, trees and triple sums for
//!   lattice-intersection sets.
//! * [`dimension`]: covering/packing counts and logarithmic gauge diagnostics.
//! * [`independent_cantor`]: Cantor trees avoiding rational linear relations.
//! * [`digit_cantor`]: sets of sums `Σ ε_n 2^{-g(n)}`.

pub mod digit_cantor;
pub mod dimension;
pub mod falconer_set;
pub mod independent_cantor;
pub mod interval;
pub mod registry;
pub mod report;
pub mod scale_chain;
pub mod sparse_dyadic;

pub use scale_chain::{LogConvention, Regime, RegimeTag, ScaleChain};
pub use sparse_dyadic::SparseDyadic;

use thiserror::Error;

/// Union of the module error types, for callers that drive several modules.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Dyadic(#[from] sparse_dyadic::DyadicError),
    #[error(transparent)]
    Interval(#[from] interval::IntervalError),
    #[error(transparent)]
    Chain(#[from] scale_chain::ChainError),
    #[error(transparent)]
    Falconer(#[from] falconer_set::FalconerError),
    #[error(transparent)]
    Dimension(#[from] dimension::DimensionError),
    #[error(transparent)]
    Independent(#[from] independent_cantor::IndependentError),
    #[error(transparent)]
    Digit(#[from] digit_cantor::DigitError),
    #[error(transparent)]
    Registry(#[from] registry::UnknownStrategy),
}

/// Crate version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
