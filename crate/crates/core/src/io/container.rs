//! The two binary containers: "MKFS" frame stacks and "MKMS" mode sets.
//!
//! Layouts (all little-endian):
//!
//! ```text
//! MKFS:  magic [4] | version u16 | nx u32 | ny u32 | T u32
//!        | dx f64 | dy f64 | x0 f64 | y0 f64 | unit u8
//!        | payload: T frames of ny*nx f32, row-major, frame-major
//! MKMS:  magic [4] | version u16 | nx u32 | ny u32
//!        | dx f64 | dy f64 | x0 f64 | y0 f64 | unit u8 | M u32
//!        | weights M f64 | profiles M frames of ny*nx f32, row-major
//! ```
//!
//! Mode-set profiles are stored unit-L2-normalized with their weights as-is
//! (descending). The version bumps on any layout change.

use std::fs::File;
use std::io::{BufReader, Read, Seek, SeekFrom};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{FrameSource, FrameStack};
use crate::grid::{AxisUnit, Field2D, PixelGrid};
use crate::modes::{ModeNormalization, ModeSet};

pub const FRAME_MAGIC: &[u8; 4] = b"MKFS";
pub const MODES_MAGIC: &[u8; 4] = b"MKMS";
pub const FORMAT_VERSION: u16 = 1;

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), reason: reason.into() }
}

struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    fn new() -> Self {
        Self { buf: Vec::new() }
    }

    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn grid_header(&mut self, grid: &PixelGrid) {
        self.u32(grid.nx() as u32);
        self.u32(grid.ny() as u32);
    }

    fn grid_geometry(&mut self, grid: &PixelGrid) {
        self.f64(grid.dx());
        self.f64(grid.dy());
        self.f64(grid.x0());
        self.f64(grid.y0());
        self.buf.push(grid.unit().tag());
    }
}

struct ByteReader<'a> {
    path: &'a Path,
    inner: BufReader<File>,
}

impl<'a> ByteReader<'a> {
    fn open(path: &'a Path) -> Result<Self> {
        Ok(Self { path, inner: BufReader::new(File::open(path)?) })
    }

    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|_| format_err(self.path, "truncated header"))?;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

/// Serializes a frame stack (labels, being advisory, are not stored).
pub fn write_frame_stack(path: &Path, stack: &FrameStack) -> Result<()> {
    let grid = stack.grid();
    let mut w = ByteWriter::new();
    w.buf.extend_from_slice(FRAME_MAGIC);
    w.u16(FORMAT_VERSION);
    w.grid_header(grid);
    w.u32(stack.num_frames() as u32);
    w.grid_geometry(grid);
    w.buf.reserve(stack.raw_data().len() * 4);
    for &v in stack.raw_data() {
        w.buf.extend_from_slice(&v.to_le_bytes());
    }
    super::atomic_write(path, &w.buf)
}

fn read_grid_counts(r: &mut ByteReader, magic: &[u8; 4]) -> Result<(usize, usize)> {
    let got: [u8; 4] = r.bytes()?;
    if &got != magic {
        return Err(format_err(r.path, format!("bad magic {got:?}")));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(format_err(r.path, format!("unsupported version {version}")));
    }
    Ok((r.u32()? as usize, r.u32()? as usize))
}

fn read_geometry(r: &mut ByteReader, nx: usize, ny: usize) -> Result<PixelGrid> {
    let dx = r.f64()?;
    let dy = r.f64()?;
    let x0 = r.f64()?;
    let y0 = r.f64()?;
    let unit = AxisUnit::from_tag(r.bytes::<1>()?[0])?;
    PixelGrid::new(nx, ny, dx, dy, x0, y0, unit)
}

fn read_f32_block(r: &mut ByteReader, count: usize, what: &str) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; count * 4];
    r.inner
        .read_exact(&mut bytes)
        .map_err(|_| format_err(r.path, format!("truncated {what}")))?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Loads a whole frame stack into memory. For large stacks prefer the
/// streaming [`FrameContainerReader`].
pub fn read_frame_stack(path: &Path) -> Result<FrameStack> {
    let mut r = ByteReader::open(path)?;
    let (nx, ny) = read_grid_counts(&mut r, FRAME_MAGIC)?;
    let frames = r.u32()? as usize;
    let grid = read_geometry(&mut r, nx, ny)?;
    let data = read_f32_block(&mut r, frames * grid.len(), "frame payload")?;
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing)? != 0 {
        return Err(format_err(path, "trailing bytes after payload"));
    }
    FrameStack::new(grid, data, None).map_err(|e| format_err(path, e.to_string()))
}

/// Streaming reader over an "MKFS" container; one frame in memory at a time.
pub struct FrameContainerReader {
    file: BufReader<File>,
    grid: PixelGrid,
    frames: usize,
    payload_start: u64,
    cursor: usize,
    path: String,
}

impl FrameContainerReader {
    pub fn open(path: &Path) -> Result<Self> {
        let mut r = ByteReader::open(path)?;
        let (nx, ny) = read_grid_counts(&mut r, FRAME_MAGIC)?;
        let frames = r.u32()? as usize;
        let grid = read_geometry(&mut r, nx, ny)?;
        let mut file = r.inner;
        let payload_start = file.stream_position()?;
        // header consistency: payload must be exactly 4 T nx ny bytes
        let len = file.get_ref().metadata()?.len();
        let expected = payload_start + 4 * (frames * grid.len()) as u64;
        if len != expected {
            return Err(format_err(
                path,
                format!("payload length {len} != expected {expected}"),
            ));
        }
        Ok(Self {
            file,
            grid,
            frames,
            payload_start,
            cursor: 0,
            path: path.display().to_string(),
        })
    }
}

impl FrameSource for FrameContainerReader {
    fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    fn num_frames(&self) -> usize {
        self.frames
    }

    fn next_frame_into(&mut self, out: &mut [f64]) -> Result<bool> {
        if self.cursor >= self.frames {
            return Ok(false);
        }
        let n = self.grid.len();
        debug_assert_eq!(out.len(), n);
        let mut bytes = vec![0u8; n * 4];
        self.file.read_exact(&mut bytes).map_err(|_| Error::Format {
            path: self.path.clone(),
            reason: format!("truncated frame {}", self.cursor),
        })?;
        for (o, c) in out.iter_mut().zip(bytes.chunks_exact(4)) {
            let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            if !v.is_finite() {
                return Err(Error::Format {
                    path: self.path.clone(),
                    reason: format!("non-finite value in frame {}", self.cursor),
                });
            }
            *o = v as f64;
        }
        self.cursor += 1;
        Ok(true)
    }

    fn rewind(&mut self) -> Result<()> {
        self.file.seek(SeekFrom::Start(self.payload_start))?;
        self.cursor = 0;
        Ok(())
    }
}

/// Serializes a mode set; profiles are written as f32.
pub fn write_mode_set(path: &Path, modes: &ModeSet) -> Result<()> {
    let grid = modes.grid();
    let mut w = ByteWriter::new();
    w.buf.extend_from_slice(MODES_MAGIC);
    w.u16(FORMAT_VERSION);
    w.grid_header(grid);
    w.grid_geometry(grid);
    w.u32(modes.len() as u32);
    for &weight in modes.weights() {
        w.f64(weight);
    }
    w.buf.reserve(modes.len() * grid.len() * 4);
    for profile in modes.profiles() {
        for &v in profile.as_slice() {
            w.buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    super::atomic_write(path, &w.buf)
}

/// Reads a mode set bundle; weights must come back descending.
pub fn read_mode_set(path: &Path) -> Result<ModeSet> {
    let mut r = ByteReader::open(path)?;
    let (nx, ny) = read_grid_counts(&mut r, MODES_MAGIC)?;
    let grid = read_geometry(&mut r, nx, ny)?;
    let count = r.u32()? as usize;
    if count == 0 {
        return Err(format_err(path, "empty mode set"));
    }
    let mut weights = Vec::with_capacity(count);
    for _ in 0..count {
        weights.push(r.f64()?);
    }
    let mut profiles = Vec::with_capacity(count);
    for _ in 0..count {
        let vals = read_f32_block(&mut r, grid.len(), "mode profile")?;
        profiles.push(
            Field2D::from_vec(grid.nx(), grid.ny(), vals.iter().map(|&v| v as f64).collect())
                .map_err(|e| format_err(path, e.to_string()))?,
        );
    }
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing)? != 0 {
        return Err(format_err(path, "trailing bytes after profiles"));
    }
    ModeSet::new(grid, weights, profiles, ModeNormalization::UnitL2Modes)
        .map_err(|e| format_err(path, e.to_string()))
}
