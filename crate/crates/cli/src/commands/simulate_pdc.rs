use std::path::PathBuf;

use modekit::io::{write_frame_stack, write_mode_set, PdcFileParams};
use modekit::modes::{decompose, schmidt_number};
use modekit::pdc::g1_pdc;
use modekit::{FrameStack, Result};

use crate::jsonlog::{emit, weights_event};

#[derive(clap::Args)]
pub struct Args {
    /// Parameter file (key = value lines); missing keys use the built-in
    /// experiment-fit defaults.
    #[arg(long)]
    params: PathBuf,
    /// Output mode-set bundle (weights plus 2D mode profiles).
    #[arg(long)]
    out: PathBuf,
    /// Also store the |G1| matrix, as a one-frame container whose rows and
    /// columns are flat pixel indices.
    #[arg(long, value_name = "FILE")]
    g1_out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let params = PdcFileParams::load(&args.params)?;
    emit(serde_json::json!({
        "event": "pdc.params",
        "gain": params.gain,
        "pump_fwhm_x": params.pump_fwhm_x,
        "ellipticity": params.ellipticity,
        "mismatch": params.mismatch,
        "crystal_length": params.crystal_length,
        "lambda_pump": params.lambda_pump,
        "n_pump": params.n_pump,
        "n_signal": params.n_signal,
        "grid_nx": params.q_grid.nx(),
        "grid_ny": params.q_grid.ny(),
        "rho_nodes": params.rho_quadrature.nodes_per_axis,
    }));

    let (g1, report) = g1_pdc(&params)?;
    emit(serde_json::json!({
        "event": "pdc.assembly",
        "nodes_per_axis": report.nodes_per_axis,
        "negativity_min_over_max": report.min_over_max_pre_abs,
        "negative_fraction": report.negative_fraction,
    }));
    for warning in &report.warnings {
        emit(serde_json::json!({ "event": "warning", "message": warning }));
    }

    if let Some(path) = &args.g1_out {
        let n = g1.order();
        let matrix_grid = modekit::PixelGrid::new(
            n,
            n,
            1.0,
            1.0,
            0.0,
            0.0,
            modekit::AxisUnit::Meters,
        )?;
        let data: Vec<f32> = g1.as_slice().iter().map(|&v| v as f32).collect();
        write_frame_stack(path, &FrameStack::new(matrix_grid, data, None)?)?;
        emit(serde_json::json!({
            "event": "pdc.g1_matrix",
            "path": path.display().to_string(),
            "order": n,
        }));
    }

    let dec = decompose(&g1)?;
    emit(serde_json::json!({
        "event": "reconstruct.eigen",
        "clamped_mass_fraction": dec.clamped_mass_fraction,
        "clamped_count": dec.clamped_count,
        "modes": dec.modes.len(),
    }));
    emit(serde_json::json!({
        "event": "schmidt_number",
        "truncate": null,
        "value": schmidt_number(&dec.modes, None)?,
    }));
    if dec.modes.len() >= 200 {
        emit(serde_json::json!({
            "event": "schmidt_number",
            "truncate": 200,
            "value": schmidt_number(&dec.modes, Some(200))?,
        }));
    }
    emit(weights_event(dec.modes.weights()));

    write_mode_set(&args.out, &dec.modes)?;
    emit(serde_json::json!({
        "event": "pdc.output",
        "path": args.out.display().to_string(),
    }));
    Ok(())
}
