//! Pseudo-thermal frame synthesis from a prescribed mode set.
//!
//! Each frame draws independent circular complex Gaussian coefficients
//! `c_m = sqrt(w_m / 2) (g_m + i h_m)` and records `I = |sum_m c_m u_m|^2`.
//! That coefficient statistics is the one consistent with thermal
//! second-order correlations (real-only coefficients would give g2 = 3 and
//! break the Siegert closure this synthesizer exists to exercise).
//!
//! Frames are generated on independent counter-derived RNG streams, so the
//! output is bit-identical for a given seed regardless of thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::FrameStack;
use crate::modes::ModeSet;

/// Sampler options; the generator mode set is passed separately.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Number of frames T (at least 2 for downstream statistics).
    pub frames: usize,
    pub seed: u64,
    /// Mean photons per frame when shot noise is enabled.
    pub photon_scale: f64,
    /// Poisson-resample each pixel at `photon_scale`.
    pub shot_noise: bool,
    /// Additive Gaussian camera noise per pixel (clamped at zero counts).
    pub dark_sigma: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        // 3000 frames mirrors a realistic single-shot acquisition run
        Self { frames: 3000, seed: 0, photon_scale: 1e6, shot_noise: false, dark_sigma: 0.0 }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::InsufficientFrames { needed: 2, got: self.frames });
        }
        if !(self.photon_scale > 0.0) || !self.photon_scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "photon scale must be positive, got {}",
                self.photon_scale
            )));
        }
        if self.dark_sigma < 0.0 || !self.dark_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dark sigma must be >= 0, got {}",
                self.dark_sigma
            )));
        }
        Ok(())
    }
}

/// Samples `cfg.frames` pseudo-thermal intensity frames from `modes`.
///
/// All generator weights must be positive (a zero-weight mode contributes
/// nothing and silently distorts closure checks; drop it instead).
pub fn sample_frames(modes: &ModeSet, cfg: &SynthConfig) -> Result<FrameStack> {
    cfg.validate()?;
    if modes.weights().iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidParameter(
            "all generator mode weights must be positive".into(),
        ));
    }
    let grid = modes.grid().clone();
    let n = grid.len();
    let n_modes = modes.len();
    let area = grid.pixel_area();
    let total_intensity: f64 = modes.weights().iter().sum();
    // photon rate per unit of intensity*area so a frame averages photon_scale
    let photon_rate = cfg.photon_scale / total_intensity;

    let amplitudes: Vec<f64> = modes.weights().iter().map(|w| (w / 2.0).sqrt()).collect();

    let mut data = vec![0.0f32; cfg.frames * n];
    data.par_chunks_mut(n).enumerate().try_for_each(|(t, out)| -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(t as u64 + 1);
        let normal = StandardNormal;

        let mut re = vec![0.0f64; n];
        let mut im = vec![0.0f64; n];
        for m in 0..n_modes {
            let g: f64 = normal.sample(&mut rng);
            let h: f64 = normal.sample(&mut rng);
            let c_re = amplitudes[m] * g;
            let c_im = amplitudes[m] * h;
            let u = modes.profile(m).as_slice();
            for p in 0..n {
                re[p] += c_re * u[p];
                im[p] += c_im * u[p];
            }
        }
        for p in 0..n {
            let mut intensity = re[p] * re[p] + im[p] * im[p];
            if cfg.shot_noise {
                let rate = intensity * area * photon_rate;
                intensity = if rate > 0.0 {
                    Poisson::new(rate)
                        .map_err(|e| Error::Numerical(format!("poisson rate {rate}: {e}")))?
                        .sample(&mut rng)
                } else {
                    0.0
                };
            }
            if cfg.dark_sigma > 0.0 {
                let noise: f64 = normal.sample(&mut rng);
                intensity += cfg.dark_sigma * noise;
            }
            out[p] = intensity.max(0.0) as f32;
        }
        Ok(())
    })?;

    Ok(FrameStack::from_parts_unchecked(grid, data))
}
