use std::path::PathBuf;

use modekit::io::{read_mode_set, write_frame_stack};
use modekit::synth::{sample_frames, SynthConfig};
use modekit::Result;

use crate::jsonlog::emit;

#[derive(clap::Args)]
pub struct Args {
    /// Generator mode-set bundle (all weights must be positive).
    #[arg(long)]
    modes: PathBuf,
    /// Number of frames to sample.
    #[arg(long)]
    frames: usize,
    /// RNG seed; the output is bit-identical for the same seed.
    #[arg(long)]
    seed: u64,
    /// Output frame-stack container.
    #[arg(long)]
    out: PathBuf,
    /// Mean photons per frame (only meaningful with --shot-noise).
    #[arg(long, default_value_t = 1e6)]
    photon_scale: f64,
    /// Poisson-resample pixel intensities at the photon scale.
    #[arg(long)]
    shot_noise: bool,
    /// Additive Gaussian camera noise per pixel, in counts.
    #[arg(long, default_value_t = 0.0)]
    dark_sigma: f64,
}

pub fn run(args: Args) -> Result<()> {
    let modes = read_mode_set(&args.modes)?;
    let cfg = SynthConfig {
        frames: args.frames,
        seed: args.seed,
        photon_scale: args.photon_scale,
        shot_noise: args.shot_noise,
        dark_sigma: args.dark_sigma,
    };
    let stack = sample_frames(&modes, &cfg)?;
    write_frame_stack(&args.out, &stack)?;
    emit(serde_json::json!({
        "event": "synth.output",
        "path": args.out.display().to_string(),
        "frames": stack.num_frames(),
        "pixels": stack.grid().len(),
        "seed": args.seed,
        "modes": modes.len(),
    }));
    Ok(())
}
