use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use modekit::io::{read_mode_set, write_pgm_normalized, FrameContainerReader};
use modekit::modes::{reconstruct_intensity, schmidt_number};
use modekit::stats::{covariance_with_mean, denoise, mean_intensity, siegert_invert};
use modekit::{Axis, Error, LineCut, Result, StatsConfig};

use crate::jsonlog::emit;

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum What {
    Modes,
    Mean,
    G1cut,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum CutAxis {
    X,
    Y,
}

#[derive(clap::Args)]
pub struct Args {
    /// Input file: a mode-set bundle or a frame-stack container (detected
    /// from the magic bytes).
    #[arg(long = "in")]
    input: PathBuf,
    /// What to render.
    #[arg(long, value_enum)]
    what: What,
    /// Fixed axis for --what g1cut.
    #[arg(long, value_enum)]
    axis: Option<CutAxis>,
    /// Physical coordinate of the cut line (snapped to the nearest pixel).
    #[arg(long)]
    at: Option<f64>,
    /// Output directory; PGM heatmaps plus plain-text matrices.
    #[arg(long)]
    out: PathBuf,
    /// How many leading modes to render with --what modes.
    #[arg(long, default_value_t = 24)]
    count: usize,
    /// Normalize each frame to its integral intensity (stack inputs).
    #[arg(long)]
    normalize_integral: bool,
    /// Noise filter for g1 cuts from stacks: `threshold:LEVEL` or `dark:PATH`.
    #[arg(long, value_name = "SPEC")]
    denoise: Option<String>,
}

enum Input {
    Bundle,
    Stack,
}

fn sniff(path: &Path) -> Result<Input> {
    let mut magic = [0u8; 4];
    fs::File::open(path)?.read_exact(&mut magic).map_err(|_| Error::Format {
        path: path.display().to_string(),
        reason: "too short for a container".into(),
    })?;
    match &magic {
        b"MKMS" => Ok(Input::Bundle),
        b"MKFS" => Ok(Input::Stack),
        other => Err(Error::Format {
            path: path.display().to_string(),
            reason: format!("unrecognized magic {other:?}"),
        }),
    }
}

fn write_text_matrix(path: &Path, rows: usize, cols: usize, values: &[f64]) -> Result<()> {
    let mut text = String::new();
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                text.push(' ');
            }
            text.push_str(&format!("{:.9e}", values[r * cols + c]));
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn render_image(dir: &Path, name: &str, nx: usize, ny: usize, values: &[f64]) -> Result<()> {
    let pgm = dir.join(format!("{name}.pgm"));
    let scale = write_pgm_normalized(&pgm, nx, ny, values)?;
    write_text_matrix(&dir.join(format!("{name}.txt")), ny, nx, values)?;
    emit(serde_json::json!({
        "event": "render.file",
        "path": pgm.display().to_string(),
        "min": scale.min,
        "max": scale.max,
    }));
    Ok(())
}

fn stats_config(args: &Args) -> Result<StatsConfig> {
    Ok(StatsConfig {
        normalize_integral: args.normalize_integral,
        subtract_shot_noise: false,
        shot_noise_scale: 1.0,
        noise_filter: match &args.denoise {
            None => modekit::NoiseFilter::None,
            Some(spec) => super::parse_denoise(spec)?,
        },
    })
}

fn cut_from_line(cut: &LineCut) -> (usize, Vec<f64>) {
    (cut.len(), cut.matrix.clone())
}

pub fn run(args: Args) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    let kind = sniff(&args.input)?;
    match (args.what, kind) {
        (What::Modes, Input::Bundle) => {
            let modes = read_mode_set(&args.input)?;
            let n = args.count.min(modes.len());
            let g = modes.grid().clone();
            for m in 0..n {
                render_image(
                    &args.out,
                    &format!("mode_{m:03}"),
                    g.nx(),
                    g.ny(),
                    modes.profile(m).as_slice(),
                )?;
            }
            emit(serde_json::json!({
                "event": "render.modes",
                "rendered": n,
                "schmidt_number": schmidt_number(&modes, None)?,
            }));
        }
        (What::Modes, Input::Stack) => {
            return Err(Error::InvalidParameter(
                "--what modes needs a mode bundle; run `reconstruct` first".into(),
            ));
        }
        (What::Mean, Input::Bundle) => {
            let modes = read_mode_set(&args.input)?;
            let mean = reconstruct_intensity(&modes, modes.len())?;
            let g = mean.grid().clone();
            render_image(&args.out, "mean", g.nx(), g.ny(), mean.values().as_slice())?;
        }
        (What::Mean, Input::Stack) => {
            let mut source = FrameContainerReader::open(&args.input)?;
            let cfg = stats_config(&args)?;
            let mean = mean_intensity(&mut source, &cfg)?;
            let g = mean.grid().clone();
            render_image(&args.out, "mean", g.nx(), g.ny(), mean.values().as_slice())?;
        }
        (What::G1cut, kind) => {
            let axis = match args.axis.ok_or_else(|| {
                Error::InvalidParameter("--what g1cut needs --axis x|y".into())
            })? {
                CutAxis::X => Axis::X,
                CutAxis::Y => Axis::Y,
            };
            let at = args
                .at
                .ok_or_else(|| Error::InvalidParameter("--what g1cut needs --at VALUE".into()))?;
            let cut = match kind {
                Input::Stack => {
                    let mut source = FrameContainerReader::open(&args.input)?;
                    let cfg = stats_config(&args)?;
                    let (cov, mean) = covariance_with_mean(&mut source, &cfg)?;
                    let (g1, report) = siegert_invert(cov, &mean, &cfg)?;
                    emit(serde_json::json!({
                        "event": "reconstruct.siegert",
                        "clamped_fraction": report.clamped_fraction(),
                    }));
                    let g1 = denoise(g1, &cfg)?;
                    g1.cut_1d(axis, at)?
                }
                Input::Bundle => {
                    // reassemble only the line submatrix from the modes
                    let modes = read_mode_set(&args.input)?;
                    let g = modes.grid().clone();
                    let (index, coords, flat): (usize, Vec<f64>, Box<dyn Fn(usize) -> usize>) =
                        match axis {
                            Axis::Y => {
                                let iy = g.snap_y(at)?;
                                let coords = (0..g.nx()).map(|ix| g.x(ix)).collect();
                                let nx = g.nx();
                                (iy, coords, Box::new(move |k| iy * nx + k))
                            }
                            Axis::X => {
                                let ix = g.snap_x(at)?;
                                let coords = (0..g.ny()).map(|iy| g.y(iy)).collect();
                                let nx = g.nx();
                                (ix, coords, Box::new(move |k| k * nx + ix))
                            }
                        };
                    let len = coords.len();
                    let mut matrix = vec![0.0f64; len * len];
                    for m in 0..modes.len() {
                        let w = modes.weights()[m];
                        let u = modes.profile(m).as_slice();
                        for a in 0..len {
                            let ua = u[flat(a)];
                            for b in 0..len {
                                matrix[a * len + b] += w * ua * u[flat(b)];
                            }
                        }
                    }
                    let snapped = match axis {
                        Axis::Y => g.y(index),
                        Axis::X => g.x(index),
                    };
                    LineCut { axis, snapped_coordinate: snapped, coords, matrix }
                }
            };
            emit(serde_json::json!({
                "event": "render.g1cut",
                "snapped_coordinate": cut.snapped_coordinate,
                "line_pixels": cut.len(),
            }));
            let (len, matrix) = cut_from_line(&cut);
            render_image(&args.out, "g1cut", len, len, &matrix)?;
            // the diagonal is the intensity profile along the line
            write_text_matrix(&args.out.join("g1cut_diagonal.txt"), 1, len, &cut.diagonal())?;
            write_text_matrix(
                &args.out.join("g1cut_antidiagonal.txt"),
                1,
                len,
                &cut.anti_diagonal(),
            )?;
        }
    }
    Ok(())
}
