//! CSV frames: one file per frame, rows of comma-separated intensities.

use std::path::Path;

use crate::error::{Error, Result};

/// Parses one CSV frame; returns (nx, ny, row-major values).
pub fn read_csv_frame(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let text = std::fs::read_to_string(path)?;
    let mut nx = None;
    let mut values = Vec::new();
    let mut ny = 0usize;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0usize;
        for cell in line.split(',') {
            let v: f32 = cell.trim().parse().map_err(|_| Error::Format {
                path: path.display().to_string(),
                reason: format!("line {}: bad number {cell:?}", line_no + 1),
            })?;
            values.push(v);
            count += 1;
        }
        match nx {
            None => nx = Some(count),
            Some(w) if w != count => {
                return Err(Error::Format {
                    path: path.display().to_string(),
                    reason: format!("line {}: {count} columns, expected {w}", line_no + 1),
                });
            }
            _ => {}
        }
        ny += 1;
    }
    let nx = nx.ok_or_else(|| Error::Format {
        path: path.display().to_string(),
        reason: "empty file".into(),
    })?;
    Ok((nx, ny, values))
}
