//! Binary PGM (P5): import of camera exports and normalized heatmap output.

use std::path::Path;

use crate::error::{Error, Result};

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), reason: reason.into() }
}

/// Reads a binary P5 file; returns (nx, ny, row-major samples as reals).
///
/// 16-bit samples (maxval > 255) are big-endian per the format; values come
/// back unscaled in `[0, maxval]`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(format_err(path, "not a binary PGM (P5) file"));
    }
    // header: three whitespace-separated tokens after "P5", '#' comments
    // allowed, then exactly one whitespace byte before the samples
    let mut pos = 2usize;
    let mut tokens = [0usize; 3];
    for slot in &mut tokens {
        // skip whitespace and comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(path, "malformed header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("digits");
        *slot = text.parse().map_err(|_| format_err(path, "header value out of range"))?;
    }
    let [nx, ny, maxval] = tokens;
    if nx == 0 || ny == 0 {
        return Err(format_err(path, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(path, format!("unsupported maxval {maxval}")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(format_err(path, "missing separator before samples"));
    }
    pos += 1;

    let wide = maxval > 255;
    let expected = nx * ny * if wide { 2 } else { 1 };
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(format_err(
            path,
            format!("payload is {} bytes, expected {expected}", payload.len()),
        ));
    }
    let values = if wide {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f32)
            .collect()
    } else {
        payload.iter().map(|&b| b as f32).collect()
    };
    Ok((nx, ny, values))
}

/// Linear mapping used when exporting a heatmap.
#[derive(Debug, Clone, Copy)]
pub struct PgmScale {
    pub min: f64,
    pub max: f64,
}

impl PgmScale {
    /// Text sidecar recording how sample values map back to data values.
    pub fn sidecar_text(&self) -> String {
        format!(
            "format = pgm-p5 maxval 65535\nmin = {:e}\nmax = {:e}\nvalue = min + sample * (max - min) / 65535\n",
            self.min, self.max
        )
    }
}

/// Writes a 16-bit P5 heatmap of `values` (row-major, `nx * ny`), mapping
/// [min, max] linearly onto [0, 65535], plus a `<path>.scale.txt` sidecar
/// with the mapping. Returns the scale used.
pub fn write_pgm_normalized(path: &Path, nx: usize, ny: usize, values: &[f64]) -> Result<PgmScale> {
    if values.len() != nx * ny {
        return Err(Error::ShapeMismatch {
            expected: format!("{} values", nx * ny),
            got: format!("{}", values.len()),
        });
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || !max.is_finite() {
        return Err(Error::NonFinite("pgm export".into()));
    }
    let span = if max > min { max - min } else { 1.0 };
    let mut bytes = Vec::with_capacity(32 + values.len() * 2);
    bytes.extend_from_slice(format!("P5\n{nx} {ny}\n65535\n").as_bytes());
    for &v in values {
        let s = ((v - min) / span * 65535.0).round().clamp(0.0, 65535.0) as u16;
        bytes.extend_from_slice(&s.to_be_bytes());
    }
    super::atomic_write(path, &bytes)?;
    let scale = PgmScale { min, max };
    let sidecar = path.with_extension(format!(
        "{}.scale.txt",
        path.extension().and_then(|e| e.to_str()).unwrap_or("pgm")
    ));
    super::atomic_write(&sidecar, scale.sidecar_text().as_bytes())?;
    Ok(scale)
}
