//! Crate-wide error type.
//!
//! Diagnostics carry plain `f64` payloads (widened from whatever scalar the caller used)
//! so that error values stay printable and comparable regardless of the kernel's scalar
//! parameter.

use thiserror::Error;

/// A structural defect in a rate matrix.
///
/// Indices are 0-based, matching the in-memory layout.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateViolation {
    /// An off-diagonal entry is negative: transition intensities must be nonnegative.
    #[error("off-diagonal rate ({i},{j}) is negative: {value}")]
    NegativeOffDiagonal { i: usize, j: usize, value: f64 },
    /// A row does not sum to zero, so probability mass would not be conserved.
    #[error("row {i} sums to {sum}, not 0 (|sum| must be <= {tol})")]
    RowSumNonzero { i: usize, sum: f64, tol: f64 },
    /// The entry buffer does not match the declared dimension.
    #[error("rate matrix for {m} states needs {m}x{m} = {expected} entries, got {got}")]
    WrongEntryCount { m: usize, expected: usize, got: usize },
}

/// Errors produced by the solvers and simulators in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix had the wrong length for the operation.
    #[error("{what}: expected length {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A probability vector failed validation.
    #[error("invalid probability vector: {reason}")]
    InvalidProbability { reason: String },

    /// A rate matrix failed validation (free-standing, no time attached).
    #[error(transparent)]
    Rate(#[from] RateViolation),

    /// A rate function produced an invalid matrix at a specific grid time.
    #[error("rate function invalid at t = {time}: {violation}")]
    RateAtTime { time: f64, violation: RateViolation },

    /// Accumulated clip-and-renormalize corrections exceeded the abort threshold.
    /// Conservative generators preserve the simplex analytically, so drift at this
    /// magnitude indicates a defective model function rather than roundoff.
    #[error("simplex drift {drift} exceeded limit {limit} at t = {time}; the rate function is likely not conservative")]
    SimplexDrift { time: f64, drift: f64, limit: f64 },

    /// A sampled candidate time saw a total exit rate above the dominating rate, which
    /// would bias thinning; the simulation is aborted rather than silently corrupted.
    #[error("exit rate {exit_rate} at t = {time} exceeds the dominating rate {bound}; rate function is not bounded as scanned")]
    UnboundedRate {
        time: f64,
        exit_rate: f64,
        bound: f64,
    },

    /// A model specification violated one of its standing assumptions.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A control value left the admissible interval.
    #[error("control out of bounds at node {node}, state {state}: {value} not in [{lo}, {hi}]")]
    ControlOutOfBounds {
        node: usize,
        state: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// The damped sweep iteration did not reach the requested tolerance. The last
    /// sup-norm update is included so callers can retry with smaller damping or a
    /// shorter horizon.
    #[error("no convergence after {iterations} sweeps; last update sup-norm {last_update} (tol {tol})")]
    NoConvergence {
        iterations: usize,
        last_update: f64,
        tol: f64,
    },

    /// A function the model supplied returned a non-finite value.
    #[error("{what} returned a non-finite value {value} at {at}")]
    NonFinite {
        what: &'static str,
        value: f64,
        at: f64,
    },

    /// Simulated paths and a solution disagree structurally (horizon or dimension).
    #[error("path/solution mismatch: {0}")]
    PathMismatch(String),

    /// Filesystem trouble while reading or writing an artifact.
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    /// The CSV layer rejected an artifact.
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),

    /// An artifact parsed as CSV but its content does not describe what the reader
    /// expected (wrong headers, unparseable numbers, inconsistent rows).
    #[error("malformed {what}: {detail}")]
    MalformedArtifact { what: &'static str, detail: String },
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
