//! Frame statistics: mean intensity, pixel-pairwise covariance, Siegert
//! inversion to |G1|, and the data-conditioning steps around them.
//!
//! The covariance is estimated in a single streaming pass: a running sum
//! vector plus a rank-k Gram accumulation over frame chunks, so the stack is
//! never resident in full. The unbiased (T-1) estimator is used; at the
//! frame counts this pipeline targets the difference from 1/T is negligible.

use faer::MatRef;

use crate::cov::{CovKind, FlatCovariance};
use crate::error::{Error, Result};
use crate::frame::{FrameSource, FrameStack, StackSource};
use crate::grid::{Field2D, PixelGrid};
use crate::linalg;

/// Noise handling applied to the |G1| matrix.
#[derive(Debug, Clone)]
pub enum NoiseFilter {
    None,
    /// Zero every entry below `level * max_entry`.
    Threshold(f64),
    /// Subtract the covariance of a dark frame stack before the Siegert
    /// inversion. With this filter [`denoise`] itself is a no-op; the
    /// subtraction happens in the covariance stage (see [`subtract_dark`]).
    DarkCov(FrameStack),
}

/// Knobs for the statistics stage.
#[derive(Debug, Clone)]
pub struct StatsConfig {
    /// Divide each frame by its total intensity before accumulating.
    /// Suppresses pulse-to-pulse power fluctuations (pump excess noise),
    /// which otherwise masquerade as a dominant first mode.
    pub normalize_integral: bool,
    /// Subtract the shot-noise delta term on the covariance diagonal.
    pub subtract_shot_noise: bool,
    /// Counts-to-photons conversion for the shot-noise term.
    pub shot_noise_scale: f64,
    pub noise_filter: NoiseFilter,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            normalize_integral: false,
            subtract_shot_noise: false,
            shot_noise_scale: 1.0,
            noise_filter: NoiseFilter::Threshold(0.02),
        }
    }
}

impl StatsConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.shot_noise_scale.is_finite() || self.shot_noise_scale < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "shot noise scale must be finite and >= 0, got {}",
                self.shot_noise_scale
            )));
        }
        if let NoiseFilter::Threshold(level) = self.noise_filter {
            if !level.is_finite() || level < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "threshold level must be finite and >= 0, got {level}"
                )));
            }
        }
        Ok(())
    }

    /// Same statistics options with the noise filter removed; used when the
    /// same config must be applied to an auxiliary (dark) stack.
    fn clone_scalars(&self) -> StatsConfig {
        StatsConfig {
            normalize_integral: self.normalize_integral,
            subtract_shot_noise: self.subtract_shot_noise,
            shot_noise_scale: self.shot_noise_scale,
            noise_filter: NoiseFilter::None,
        }
    }
}

/// Pixel-wise mean of the (optionally normalized) frames.
#[derive(Debug, Clone)]
pub struct MeanIntensity {
    grid: PixelGrid,
    values: Field2D,
}

impl MeanIntensity {
    pub fn new(grid: PixelGrid, values: Field2D) -> Result<Self> {
        values.ensure_matches(&grid, "mean intensity")?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    pub fn values(&self) -> &Field2D {
        &self.values
    }

    pub fn into_values(self) -> Field2D {
        self.values
    }

    /// Mean at flat pixel index `n`.
    pub fn at_flat(&self, n: usize) -> f64 {
        self.values.as_slice()[n]
    }
}

/// Frames per Gram-accumulation chunk. Small enough that the chunk buffer is
/// negligible next to the matrix, large enough to amortize the matmul.
const CHUNK_FRAMES: usize = 64;

/// Bytes the streaming covariance pass needs at peak for an `n`-pixel grid:
/// the matrix itself, the chunk buffer, and the running sums.
pub fn covariance_memory_estimate(n_pixels: usize) -> u64 {
    let n = n_pixels as u64;
    8 * (n * n + n * CHUNK_FRAMES as u64 + 2 * n)
}

fn read_frame(
    source: &mut dyn FrameSource,
    buf: &mut [f64],
    cfg: &StatsConfig,
    index: usize,
) -> Result<bool> {
    if !source.next_frame_into(buf)? {
        return Ok(false);
    }
    if cfg.normalize_integral {
        let total: f64 = buf.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateFrame { index, label: source.frame_label(index) });
        }
        for v in buf.iter_mut() {
            *v /= total;
        }
    }
    Ok(true)
}

/// Pixel-wise sample mean over all frames of `source`.
pub fn mean_intensity(source: &mut dyn FrameSource, cfg: &StatsConfig) -> Result<MeanIntensity> {
    cfg.validate()?;
    let grid = source.grid().clone();
    let n = grid.len();
    let mut sum = vec![0.0f64; n];
    let mut buf = vec![0.0f64; n];
    let mut count = 0usize;
    while read_frame(source, &mut buf, cfg, count)? {
        for (s, v) in sum.iter_mut().zip(&buf) {
            *s += v;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientFrames { needed: 1, got: 0 });
    }
    let inv = 1.0 / count as f64;
    for s in &mut sum {
        *s *= inv;
    }
    let values = Field2D::from_vec(grid.nx(), grid.ny(), sum)?;
    MeanIntensity::new(grid, values)
}

/// Unbiased sample covariance over all pixel pairs, plus the mean from the
/// same pass.
pub fn covariance_with_mean(
    source: &mut dyn FrameSource,
    cfg: &StatsConfig,
) -> Result<(FlatCovariance, MeanIntensity)> {
    cfg.validate()?;
    let grid = source.grid().clone();
    let n = grid.len();
    let mut gram = vec![0.0f64; n * n];
    let mut sum = vec![0.0f64; n];
    let mut chunk = vec![0.0f64; n * CHUNK_FRAMES];
    let mut filled = 0usize;
    let mut count = 0usize;

    loop {
        let col = &mut chunk[filled * n..(filled + 1) * n];
        if !read_frame(source, col, cfg, count)? {
            break;
        }
        for (s, v) in sum.iter_mut().zip(col.iter()) {
            *s += v;
        }
        count += 1;
        filled += 1;
        if filled == CHUNK_FRAMES {
            let z = MatRef::from_column_major_slice(&chunk, n, filled);
            linalg::accumulate_gram_lower(&mut gram, n, z);
            filled = 0;
        }
    }
    if filled > 0 {
        let z = MatRef::from_column_major_slice(&chunk[..filled * n], n, filled);
        linalg::accumulate_gram_lower(&mut gram, n, z);
    }
    drop(chunk);

    if count < 2 {
        return Err(Error::InsufficientFrames { needed: 2, got: count });
    }

    let t = count as f64;
    let inv_t = 1.0 / t;
    let inv_tm1 = 1.0 / (t - 1.0);
    // gram currently holds lower-triangular sum x x^T in column-major order,
    // i.e. gram[j*n + i] for i >= j.
    for j in 0..n {
        for i in j..n {
            let c = (gram[j * n + i] - sum[i] * sum[j] * inv_t) * inv_tm1;
            gram[j * n + i] = if i == j { c.max(0.0) } else { c };
        }
    }
    // Symmetric buffer: row- and column-major views coincide afterwards.
    for j in 0..n {
        for i in j + 1..n {
            gram[i * n + j] = gram[j * n + i];
        }
    }

    let mean_values: Vec<f64> = sum.iter().map(|s| s * inv_t).collect();
    let mean = MeanIntensity::new(grid.clone(), Field2D::from_vec(grid.nx(), grid.ny(), mean_values)?)?;
    let cov = FlatCovariance::from_symmetric_parts(grid, CovKind::Covariance, gram);
    Ok((cov, mean))
}

/// Unbiased sample covariance; see [`covariance_with_mean`].
pub fn covariance(source: &mut dyn FrameSource, cfg: &StatsConfig) -> Result<FlatCovariance> {
    covariance_with_mean(source, cfg).map(|(c, _)| c)
}

/// Covariance of the dark stack named in the noise filter, computed with the
/// same statistics options, or `None` for the other filter modes.
pub fn dark_covariance(cfg: &StatsConfig) -> Result<Option<FlatCovariance>> {
    match &cfg.noise_filter {
        NoiseFilter::DarkCov(dark) => {
            let scalars = cfg.clone_scalars();
            let mut src = StackSource::new(dark);
            Ok(Some(covariance(&mut src, &scalars)?))
        }
        _ => Ok(None),
    }
}

/// Subtracts a dark covariance entrywise (before Siegert inversion).
pub fn subtract_dark(cov: &mut FlatCovariance, dark: &FlatCovariance) -> Result<()> {
    cov.grid().ensure_same(dark.grid(), "dark covariance subtraction")?;
    if cov.kind() != CovKind::Covariance || dark.kind() != CovKind::Covariance {
        return Err(Error::InvalidParameter(
            "dark subtraction applies to covariance matrices".into(),
        ));
    }
    for (c, d) in cov.as_mut_slice().iter_mut().zip(dark.as_slice()) {
        *c -= d;
    }
    Ok(())
}

/// Diagnostics from the Siegert inversion.
#[derive(Debug, Clone, Copy)]
pub struct SiegertReport {
    /// Entries whose radicand was negative and got clamped to zero.
    pub clamped_entries: u64,
    pub total_entries: u64,
}

impl SiegertReport {
    pub fn clamped_fraction(&self) -> f64 {
        if self.total_entries == 0 {
            0.0
        } else {
            self.clamped_entries as f64 / self.total_entries as f64
        }
    }
}

/// Inverts the Siegert relation entrywise: `|G1| = Re sqrt(Cov - shot)`.
///
/// The shot-noise term is a diagonal `shot_noise_scale * <I>` subtraction,
/// applied only when `cfg.subtract_shot_noise` is set. Negative radicands
/// (an artifact of per-frame normalization and finite sampling) map to zero,
/// i.e. the real part of the square root; the clamped fraction is reported
/// as a quality metric.
pub fn siegert_invert(
    cov: FlatCovariance,
    mean: &MeanIntensity,
    cfg: &StatsConfig,
) -> Result<(FlatCovariance, SiegertReport)> {
    cfg.validate()?;
    if cov.kind() != CovKind::Covariance {
        return Err(Error::InvalidParameter("siegert inversion expects a covariance matrix".into()));
    }
    cov.grid().ensure_same(mean.grid(), "siegert inversion")?;
    let n = cov.order();
    let (grid, _, mut data) = cov.into_parts();
    let mut clamped = 0u64;
    for i in 0..n {
        for j in 0..n {
            let idx = i * n + j;
            let mut v = data[idx];
            if cfg.subtract_shot_noise && i == j {
                v -= cfg.shot_noise_scale * mean.at_flat(i);
            }
            data[idx] = if v > 0.0 {
                v.sqrt()
            } else {
                if v < 0.0 {
                    clamped += 1;
                }
                0.0
            };
        }
    }
    let report = SiegertReport { clamped_entries: clamped, total_entries: (n * n) as u64 };
    Ok((FlatCovariance::from_symmetric_parts(grid, CovKind::AbsG1, data), report))
}

/// Applies the configured noise filter to a |G1| matrix.
///
/// Threshold mode zeroes entries below `level * max`; dark mode is a no-op
/// here (its subtraction runs before the Siegert inversion) and only checks
/// that the dark stack matches the grid. Output stays symmetric and
/// non-negative.
pub fn denoise(g1: FlatCovariance, cfg: &StatsConfig) -> Result<FlatCovariance> {
    cfg.validate()?;
    if g1.kind() != CovKind::AbsG1 {
        return Err(Error::InvalidParameter("denoise expects a |G1| matrix".into()));
    }
    match &cfg.noise_filter {
        NoiseFilter::None => Ok(g1),
        NoiseFilter::DarkCov(dark) => {
            g1.grid().ensure_same(dark.grid(), "dark stack")?;
            Ok(g1)
        }
        NoiseFilter::Threshold(level) => {
            let cutoff = level * g1.max_abs();
            let (grid, kind, mut data) = g1.into_parts();
            for v in &mut data {
                if *v < cutoff {
                    *v = 0.0;
                }
            }
            Ok(FlatCovariance::from_symmetric_parts(grid, kind, data))
        }
    }
}
