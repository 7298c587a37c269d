//! Shared fixtures for the benchmark suite.

use modekit::hg::hg_profile;
use modekit::modes::{ModeNormalization, ModeSet};
use modekit::synth::{sample_frames, SynthConfig};
use modekit::{AxisUnit, Field2D, FrameStack, PixelGrid};

/// Hermite-Gauss ladder generator on an `n x n` grid.
pub fn ladder_modeset(n: usize, count: usize) -> ModeSet {
    let grid = PixelGrid::centered(n, n, 1.0, 1.0, AxisUnit::Meters).unwrap();
    let weights: Vec<f64> = (0..count).map(|m| (-(m as f64) / 6.0).exp()).collect();
    let profiles: Vec<Field2D> = (0..count)
        .map(|m| hg_profile(&grid, m as u32, 0, n as f64 / 9.0).unwrap())
        .collect();
    ModeSet::new(grid, weights, profiles, ModeNormalization::UnitL2Modes).unwrap()
}

/// Deterministic pseudo-thermal stack for the statistics benchmarks.
pub fn thermal_stack(n: usize, frames: usize) -> FrameStack {
    let modes = ladder_modeset(n, 12);
    sample_frames(&modes, &SynthConfig { frames, seed: 42, ..SynthConfig::default() }).unwrap()
}
