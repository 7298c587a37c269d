use std::path::PathBuf;

use modekit::fiber::{lp_cutoffs, lp_modeset, mode_count, v_number_mode_estimate};
use modekit::io::{write_mode_set, FiberFileParams};
use modekit::Result;

use crate::jsonlog::emit;

#[derive(clap::Args)]
pub struct Args {
    /// Parameter file (key = value lines): core_radius, wavelength, and
    /// na (or n_core/n_clad), plus optional grid keys.
    #[arg(long)]
    params: PathBuf,
    /// Output mode-set bundle of LP profiles (uniform weights).
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let params = FiberFileParams::load(&args.params)?;
    let v = params.v_number();
    emit(serde_json::json!({
        "event": "fiber.params",
        "core_radius": params.core_radius,
        "numerical_aperture": params.numerical_aperture,
        "wavelength": params.wavelength,
        "v_number": v,
        "grid_nx": params.grid.nx(),
    }));

    let cutoffs = lp_cutoffs(&params)?;
    for mode in &cutoffs {
        emit(serde_json::json!({
            "event": "fiber.lp_mode",
            "l": mode.l,
            "m": mode.m,
            "cutoff_v": mode.cutoff_v,
            "degeneracy": mode.degeneracy(),
        }));
    }
    emit(serde_json::json!({
        "event": "fiber.mode_count",
        "enumerated": mode_count(&params)?,
        "v_number_estimate": v_number_mode_estimate(&params)?,
    }));

    let modes = lp_modeset(&params)?;
    write_mode_set(&args.out, &modes)?;
    emit(serde_json::json!({
        "event": "fiber.output",
        "path": args.out.display().to_string(),
        "profiles": modes.len(),
    }));
    Ok(())
}
