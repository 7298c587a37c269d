//! Reconstruction of 2D spatial coherent modes of thermal light from stacks
//! of intensity frames, plus the reference simulators used to validate it.
//!
//! The pipeline: estimate the pixel-pairwise intensity covariance from
//! repeated frames, invert the Siegert relation to get |G1|, flatten the
//! four-dimensional two-point function into a dense symmetric matrix over
//! row-major pixel indices, eigendecompose it, and fold the eigenvectors
//! back into 2D mode profiles with their weights.
//!
//! Main entry points:
//! - [`stats::covariance_with_mean`] / [`stats::siegert_invert`] /
//!   [`modes::decompose`] for the individual stages,
//! - [`pipeline::reconstruct_modes`] for the whole chain,
//! - [`pdc`] and [`fiber`] for the reference simulators,
//! - [`synth`] for sampling pseudo-thermal frames from known modes,
//! - [`io`] for the binary container formats and external image formats.

pub mod bessel;
pub mod cov;
pub mod error;
pub mod fiber;
pub mod frame;
pub mod grid;
pub mod hg;
pub mod io;
mod linalg;
pub mod modes;
pub mod pdc;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use cov::{Axis, CovKind, FlatCovariance, LineCut};
pub use error::{Error, Result};
pub use frame::{FrameSource, FrameStack, StackSource};
pub use grid::{AxisUnit, Field2D, PixelGrid};
pub use modes::{ModeNormalization, ModeSet};
pub use stats::{MeanIntensity, NoiseFilter, StatsConfig};
