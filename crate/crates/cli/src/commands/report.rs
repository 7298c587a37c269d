use std::path::PathBuf;

use modekit::io::{read_mode_set, FrameContainerReader};
use modekit::modes::{reconstruct_intensity, schmidt_number};
use modekit::stats::mean_intensity;
use modekit::{FrameSource, Result, StatsConfig};

use crate::jsonlog::{emit, weights_event};

#[derive(clap::Args)]
pub struct Args {
    /// Mode-set bundle to summarize.
    #[arg(long = "in")]
    input: PathBuf,
    /// Optional frame-stack container; its pixel mean is compared against
    /// the intensity reconstructed from the modes.
    #[arg(long, value_name = "STACK")]
    mean: Option<PathBuf>,
    /// Normalize frames to integral intensity when computing that mean
    /// (must match how the bundle was reconstructed).
    #[arg(long)]
    normalize_integral: bool,
}

pub fn run(args: Args) -> Result<()> {
    let modes = read_mode_set(&args.input)?;
    let k_all = schmidt_number(&modes, None)?;
    emit(serde_json::json!({
        "event": "report.modes",
        "count": modes.len(),
        "pixels": modes.grid().len(),
    }));
    emit(serde_json::json!({ "event": "schmidt_number", "truncate": null, "value": k_all }));
    if modes.len() >= 200 {
        emit(serde_json::json!({
            "event": "schmidt_number",
            "truncate": 200,
            "value": schmidt_number(&modes, Some(200))?,
        }));
    }

    if let Some((rate, r2)) = super::exponential_decay_fit(modes.weights(), 50) {
        emit(serde_json::json!({
            "event": "report.weight_decay",
            "fit_modes": 50.min(modes.len()),
            "rate_per_mode": rate,
            "r_squared": r2,
        }));
    }

    let total: f64 = modes.weights().iter().sum();
    let k_ceil = (k_all.ceil() as usize).min(modes.len());
    let captured: f64 = modes.weights()[..k_ceil].iter().sum::<f64>() / total;
    emit(serde_json::json!({
        "event": "report.capture",
        "modes": k_ceil,
        "fraction_of_total_intensity": captured,
    }));
    emit(weights_event(modes.weights()));

    if let Some(stack_path) = &args.mean {
        let mut source = FrameContainerReader::open(stack_path)?;
        let cfg = StatsConfig {
            normalize_integral: args.normalize_integral,
            noise_filter: modekit::NoiseFilter::None,
            ..StatsConfig::default()
        };
        let measured = mean_intensity(&mut source, &cfg)?;
        measured.grid().ensure_same(modes.grid(), "report mean comparison")?;
        let reconstructed = reconstruct_intensity(&modes, modes.len())?;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for (r, m) in reconstructed
            .values()
            .as_slice()
            .iter()
            .zip(measured.values().as_slice())
        {
            num += (r - m) * (r - m);
            den += m * m;
        }
        let residual = (num / den.max(f64::MIN_POSITIVE)).sqrt();
        emit(serde_json::json!({
            "event": "report.reconstruction_residual",
            "relative_l2": residual,
            "frames": source.num_frames(),
        }));
    }
    Ok(())
}
