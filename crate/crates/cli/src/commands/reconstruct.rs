use std::path::PathBuf;

use modekit::io::{write_mode_set, FrameContainerReader};
use modekit::pipeline::{reconstruct_modes, ReconstructOptions, SolverChoice};
use modekit::{Result, StatsConfig};

use crate::jsonlog::{emit, weights_event};

#[derive(clap::Args)]
pub struct Args {
    /// Frame-stack container to reconstruct from.
    #[arg(long)]
    frames: PathBuf,
    /// Output mode-set bundle.
    #[arg(long)]
    out: PathBuf,
    /// Divide each frame by its total intensity (suppresses pulse-to-pulse
    /// power fluctuations).
    #[arg(long)]
    normalize_integral: bool,
    /// Subtract the shot-noise diagonal with this counts-to-photons scale.
    #[arg(long, value_name = "SCALE")]
    shot_noise: Option<f64>,
    /// Noise filter: `threshold:LEVEL` (relative to the |G1| maximum) or
    /// `dark:PATH` (dark frame-stack container). Defaults to no filtering.
    #[arg(long, value_name = "SPEC")]
    denoise: Option<String>,
    /// Keep only the leading K modes via the iterative solver.
    #[arg(long, value_name = "K")]
    top_k: Option<usize>,
}

pub fn run(args: Args) -> Result<()> {
    let stats = StatsConfig {
        normalize_integral: args.normalize_integral,
        subtract_shot_noise: args.shot_noise.is_some(),
        shot_noise_scale: args.shot_noise.unwrap_or(1.0),
        noise_filter: match &args.denoise {
            None => modekit::NoiseFilter::None,
            Some(spec) => super::parse_denoise(spec)?,
        },
    };
    let solver = match args.top_k {
        Some(k) => SolverChoice::TopK { k, seed: 0 },
        None => SolverChoice::Dense,
    };
    let opts = ReconstructOptions { stats, solver, ..ReconstructOptions::default() };

    let mut source = FrameContainerReader::open(&args.frames)?;
    let recon = reconstruct_modes(&mut source, &opts)?;

    emit(serde_json::json!({
        "event": "reconstruct.input",
        "frames": recon.frames_used,
        "pixels": recon.modes.grid().len(),
    }));
    emit(serde_json::json!({
        "event": "reconstruct.siegert",
        "clamped_fraction": recon.siegert.clamped_fraction(),
        "clamped_entries": recon.siegert.clamped_entries,
    }));
    emit(serde_json::json!({
        "event": "reconstruct.eigen",
        "clamped_mass_fraction": recon.clamped_mass_fraction,
        "clamped_count": recon.clamped_count,
        "modes": recon.modes.len(),
    }));
    emit(serde_json::json!({
        "event": "schmidt_number",
        "truncate": null,
        "value": recon.schmidt_number(None)?,
    }));
    if recon.modes.len() > 200 {
        emit(serde_json::json!({
            "event": "schmidt_number",
            "truncate": 200,
            "value": recon.schmidt_number(Some(200))?,
        }));
    }
    emit(weights_event(recon.modes.weights()));

    write_mode_set(&args.out, &recon.modes)?;
    emit(serde_json::json!({
        "event": "reconstruct.output",
        "path": args.out.display().to_string(),
    }));
    Ok(())
}
