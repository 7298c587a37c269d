//! File formats: the frame-stack and mode-set binary containers, PGM and
//! CSV import/export, and flat key-value parameter files.
//!
//! All container values are little-endian; writes go through a temp file in
//! the destination directory followed by a rename, so readers never observe
//! a partial file.

mod container;
mod csvdir;
mod params;
mod pgm;

pub use container::{
    read_frame_stack, read_mode_set, write_frame_stack, write_mode_set, FrameContainerReader,
};
pub use csvdir::read_csv_frame;
pub use params::{parse_key_values, FiberFileParams, PdcFileParams};
pub use pgm::{read_pgm, write_pgm_normalized, PgmScale};

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::FrameStack;
use crate::grid::{AxisUnit, PixelGrid};

/// Source layout for [`import_frames`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportFormat {
    /// One self-describing frame-stack container file.
    Container,
    /// Directory of binary PGM (P5) files, one frame each, in lexicographic
    /// file-name order.
    PgmDir,
    /// Directory of CSV files, one frame each (rows of comma-separated
    /// values), in lexicographic file-name order.
    CsvDir,
}

/// Physical grid metadata for formats that do not carry any (PGM, CSV).
#[derive(Debug, Clone, Copy)]
pub struct GridMeta {
    pub dx: f64,
    pub dy: f64,
    pub x0: f64,
    pub y0: f64,
    pub unit: AxisUnit,
}

impl GridMeta {
    fn grid(&self, nx: usize, ny: usize) -> Result<PixelGrid> {
        PixelGrid::new(nx, ny, self.dx, self.dy, self.x0, self.y0, self.unit)
    }
}

/// Loads a frame stack from one of the supported layouts.
///
/// Directory formats read files in lexicographic order; a frame whose shape
/// disagrees with the first file is rejected with the offending file name.
pub fn import_frames(
    path: &Path,
    format: ImportFormat,
    meta: Option<&GridMeta>,
) -> Result<FrameStack> {
    match format {
        ImportFormat::Container => read_frame_stack(path),
        ImportFormat::PgmDir => import_dir(path, meta, "pgm", pgm::read_pgm),
        ImportFormat::CsvDir => import_dir(path, meta, "csv", csvdir::read_csv_frame),
    }
}

fn import_dir(
    dir: &Path,
    meta: Option<&GridMeta>,
    extension: &str,
    read_one: impl Fn(&Path) -> Result<(usize, usize, Vec<f32>)>,
) -> Result<FrameStack> {
    let meta = meta.ok_or_else(|| {
        Error::InvalidParameter("directory import needs grid metadata (pixel pitch)".into())
    })?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case(extension))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Format {
            path: dir.display().to_string(),
            reason: format!("no .{extension} files found"),
        });
    }

    let mut shape: Option<(usize, usize)> = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for file in &files {
        let (nx, ny, values) = read_one(file)?;
        match shape {
            None => shape = Some((nx, ny)),
            Some(s) if s != (nx, ny) => {
                return Err(Error::Format {
                    path: file.display().to_string(),
                    reason: format!("frame is {nx}x{ny}, expected {}x{}", s.0, s.1),
                });
            }
            _ => {}
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Format {
                    path: file.display().to_string(),
                    reason: format!("non-finite value at pixel {i}"),
                });
            }
        }
        data.extend_from_slice(&values);
        labels.push(
            file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        );
    }
    let (nx, ny) = shape.expect("at least one file");
    let grid = meta.grid(nx, ny)?;
    FrameStack::new(grid, data, Some(labels))
}

/// Writes `bytes` atomically: temp file in the same directory, then rename.
pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisUnit;

    #[test]
    fn csv_dir_roundtrip_row_major() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b_frame.csv"), "9,8,7\n6,5,4\n").unwrap();
        std::fs::write(dir.path().join("a_frame.csv"), "1,2,3\n4,5,6\n").unwrap();
        let meta =
            GridMeta { dx: 1.0, dy: 1.0, x0: 0.0, y0: 0.0, unit: AxisUnit::Meters };
        let stack = import_frames(dir.path(), ImportFormat::CsvDir, Some(&meta)).unwrap();
        assert_eq!(stack.num_frames(), 2);
        // lexicographic order: a_frame first
        assert_eq!(stack.frame(0), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(stack.frame(1), &[9.0, 8.0, 7.0, 6.0, 5.0, 4.0]);
        assert_eq!(stack.label(0), Some("a_frame.csv"));
    }

    #[test]
    fn shape_mismatch_names_offending_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("0.csv"), "1,2\n3,4\n").unwrap();
        std::fs::write(dir.path().join("1.csv"), "1,2,3\n").unwrap();
        let meta =
            GridMeta { dx: 1.0, dy: 1.0, x0: 0.0, y0: 0.0, unit: AxisUnit::Meters };
        let err = import_frames(dir.path(), ImportFormat::CsvDir, Some(&meta)).unwrap_err();
        match err {
            Error::Format { path, .. } => assert!(path.contains("1.csv")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
