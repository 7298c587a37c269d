use std::path::PathBuf;

use modekit::io::read_mode_set;
use modekit::modes::match_modes;
use modekit::Result;

use crate::jsonlog::emit;

#[derive(clap::Args)]
pub struct Args {
    /// First mode-set bundle (e.g. a reconstruction).
    #[arg(long)]
    a: PathBuf,
    /// Second mode-set bundle (e.g. simulated theory modes).
    #[arg(long)]
    b: PathBuf,
    /// Number of leading modes to match.
    #[arg(long)]
    count: usize,
}

pub fn run(args: Args) -> Result<()> {
    let a = read_mode_set(&args.a)?;
    let b = read_mode_set(&args.b)?;
    let pairs = match_modes(&a, &b, args.count)?;
    for pair in &pairs {
        emit(serde_json::json!({
            "event": "match",
            "index_a": pair.index_a,
            "index_b": pair.index_b,
            "fidelity": pair.fidelity,
            "weight_a": a.weights()[pair.index_a],
            "weight_b": b.weights()[pair.index_b],
        }));
    }
    let min = pairs.iter().map(|p| p.fidelity).fold(f64::INFINITY, f64::min);
    let mean = pairs.iter().map(|p| p.fidelity).sum::<f64>() / pairs.len() as f64;
    emit(serde_json::json!({
        "event": "match.summary",
        "count": pairs.len(),
        "min_fidelity": min,
        "mean_fidelity": mean,
    }));
    Ok(())
}
