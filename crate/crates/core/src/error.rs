//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the reconstruction pipeline and the simulators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("pixel index ({ix}, {iy}) outside {nx}x{ny} grid")]
    PixelOutOfRange { ix: usize, iy: usize, nx: usize, ny: usize },

    #[error("flat index {index} outside grid with {len} pixels")]
    FlatIndexOutOfRange { index: usize, len: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("grids differ: {0}")]
    GridMismatch(String),

    #[error("coordinate {value} outside grid extent [{min}, {max}]")]
    CoordinateOutOfRange { value: f64, min: f64, max: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frame {index}{} has zero total intensity; cannot normalize", label_suffix(.label))]
    DegenerateFrame { index: usize, label: Option<String> },

    #[error("need at least {needed} frames, got {got}")]
    InsufficientFrames { needed: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("matrix asymmetry {max_dev:.3e} exceeds tolerance {tol:.3e}")]
    Asymmetric { max_dev: f64, tol: f64 },

    #[error("all mode weights are zero")]
    DegenerateWeights,

    #[error("{0}")]
    RangeError(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("problem needs {needed_bytes} bytes, above the {limit_bytes} byte limit; {advice}")]
    TooLarge { needed_bytes: u64, limit_bytes: u64, advice: String },

    #[error("covariance is identically zero; no modes to extract")]
    ZeroCovariance,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error("parse error in {context}: {reason}")]
    Parse { context: String, reason: String },
}

fn label_suffix(label: &Option<String>) -> String {
    match label {
        Some(l) => format!(" ({l})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
