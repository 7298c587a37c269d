//! End-to-end reconstruction: frames -> covariance -> |G1| -> modes.

use crate::error::{Error, Result};
use crate::frame::FrameSource;
use crate::modes::{self, ModeSet};
use crate::stats::{self, MeanIntensity, NoiseFilter, SiegertReport, StatsConfig};

/// Eigensolver selection for the decomposition stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    /// Full dense eigendecomposition (default; exact spectrum).
    Dense,
    /// Iterative leading-k eigenpairs; the practical path for grids past
    /// roughly 4096 pixels, where only the leading modes carry weight.
    TopK { k: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct ReconstructOptions {
    pub stats: StatsConfig,
    pub solver: SolverChoice,
    /// Refuse to allocate a covariance matrix larger than this.
    pub max_matrix_bytes: u64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            stats: StatsConfig::default(),
            solver: SolverChoice::Dense,
            max_matrix_bytes: 6 * 1024 * 1024 * 1024,
        }
    }
}

/// Everything the reconstruction produced, with the quality metrics the
/// report stage prints.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub modes: ModeSet,
    pub mean: MeanIntensity,
    pub frames_used: usize,
    pub siegert: SiegertReport,
    /// Negative-eigenvalue mass clamped in the decomposition, over trace.
    pub clamped_mass_fraction: f64,
    pub clamped_count: usize,
}

impl Reconstruction {
    pub fn schmidt_number(&self, truncate: Option<usize>) -> Result<f64> {
        modes::schmidt_number(&self.modes, truncate)
    }
}

/// Runs the full chain on a frame source.
///
/// Dark-covariance subtraction (when configured) happens between the
/// covariance estimate and the Siegert inversion; the threshold filter
/// applies to |G1| afterwards.
pub fn reconstruct_modes(
    source: &mut dyn FrameSource,
    opts: &ReconstructOptions,
) -> Result<Reconstruction> {
    let n = source.grid().len();
    let needed = stats::covariance_memory_estimate(n);
    if needed > opts.max_matrix_bytes {
        return Err(Error::TooLarge {
            needed_bytes: needed,
            limit_bytes: opts.max_matrix_bytes,
            advice: "bin or crop the frames to reduce the pixel count".into(),
        });
    }

    let frames_used = source.num_frames();
    let (mut cov, mean) = stats::covariance_with_mean(source, &opts.stats)?;
    if matches!(opts.stats.noise_filter, NoiseFilter::DarkCov(_)) {
        let dark = stats::dark_covariance(&opts.stats)?
            .expect("dark covariance present for DarkCov filter");
        stats::subtract_dark(&mut cov, &dark)?;
    }
    let (g1, siegert) = stats::siegert_invert(cov, &mean, &opts.stats)?;
    let g1 = stats::denoise(g1, &opts.stats)?;

    let decomposition = match opts.solver {
        SolverChoice::Dense => modes::decompose(&g1)?,
        SolverChoice::TopK { k, seed } => modes::decompose_top_k(&g1, k, seed)?,
    };

    Ok(Reconstruction {
        modes: decomposition.modes,
        mean,
        frames_used,
        siegert,
        clamped_mass_fraction: decomposition.clamped_mass_fraction,
        clamped_count: decomposition.clamped_count,
    })
}
