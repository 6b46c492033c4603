//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide `Result` alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced while building models, solving exponent problems or
/// simulating decoders.
///
/// Infeasible optimization problems are *not* errors: they come back as a
/// `+inf` value with `feasible == false`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two objects that must share an alphabet do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A probability vector or matrix row does not sum to one.
    #[error("{what} sums to {sum} (expected 1 within {tol:e})")]
    NotNormalized { what: String, sum: f64, tol: f64 },

    /// An entry is negative, above one, or not finite.
    #[error("invalid probability {value} in {what}")]
    InvalidProbability { what: String, value: f64 },

    /// An alphabet or distribution was given with too few symbols.
    #[error("alphabet of size {size} is too small (need at least {min})")]
    AlphabetTooSmall { size: usize, min: usize },

    /// Paired sequences of different lengths.
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    /// An empty sequence where at least one symbol is required.
    #[error("empty sequence")]
    EmptySequence,

    /// A symbol index outside its alphabet.
    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },

    /// No n-type lies close enough to the requested input distribution.
    #[error("no {n}-type lies within total variation {tol} of the input distribution; adjust the blocklength")]
    NoNearbyType { n: usize, tol: f64 },

    /// The rate rounds to fewer than two codewords.
    #[error("rate {rate} at blocklength {n} gives M = {m} codewords; need at least 2")]
    TooFewCodewords { rate: f64, n: usize, m: usize },

    /// Exhaustive enumeration would exceed the configured work budget.
    #[error("exact enumeration needs {cost:e} decoder calls, budget is {budget:e}; use Monte Carlo instead")]
    BudgetExceeded { cost: f64, budget: f64 },

    /// A fixed-point iteration did not settle.
    #[error("no convergence after {iterations} iterations (trace: {trace:?})")]
    NoConvergence { iterations: usize, trace: Vec<f64> },

    /// A problem that must have a solution turned out to be empty.
    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// Malformed input text.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Any other argument outside the documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
