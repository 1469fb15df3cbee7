//! Error type shared by every module of the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("matrix is not square: {rows} rows, row {row} has {cols} entries")]
    NotSquare { rows: usize, row: usize, cols: usize },

    #[error("dimension mismatch: h0 is {h0}x{h0}, v is {v}x{v}")]
    DimensionMismatch { h0: usize, v: usize },

    #[error("{which} is not symmetric: relative deviation {deviation:.3e} exceeds {tolerance:.1e}")]
    NotSymmetric {
        which: &'static str,
        deviation: f64,
        tolerance: f64,
    },

    #[error("dimension {n} is below the minimum of 2")]
    DimensionTooSmall { n: usize },

    #[error("boson number {n} exceeds the Fock oracle ceiling of {max}")]
    OracleCeiling { n: u32, max: u32 },

    #[error("dimension {n} exceeds the census ceiling of {max}")]
    CensusCeiling { n: usize, max: usize },

    #[error("eigensolver failed at lambda={lambda} (n={n}): {detail}")]
    Eigensolver { lambda: String, n: usize, detail: String },

    #[error("near-degenerate levels {k} and {l} at lambda={lambda}: gap {gap:.3e} below {threshold:.3e}")]
    NearDegenerate {
        lambda: f64,
        k: usize,
        l: usize,
        gap: f64,
        threshold: f64,
    },

    #[error("zero gap between levels {level} and {other} at lambda={lambda}; reduce to a symmetry subspace or nudge the grid")]
    ZeroGap { lambda: f64, level: usize, other: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no local maximum of C found{0}")]
    NoPeak(String),

    #[error("peak truncated by the grid boundary near lambda={lambda}")]
    PeakTruncated { lambda: f64 },

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {error:.3e}")]
    Quadrature { a: f64, b: f64, error: f64 },

    #[error("insufficient N span: {0}")]
    InsufficientSpan(String),
}
