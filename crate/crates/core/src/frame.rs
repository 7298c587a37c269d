//! Intensity frame stacks and streaming frame sources.
//!
//! Frames are stored as `f32` (camera dynamic range is far below `f32`
//! resolution) in frame-major, row-major order; all statistics downstream run
//! in `f64`. Statistics consume frames through [`FrameSource`] so that a
//! full-sensor stack never has to be resident: a container file on disk and
//! an in-memory stack expose the same one-pass interface.

use crate::error::{Error, Result};
use crate::grid::{Field2D, PixelGrid};

/// Ordered stack of same-shaped non-negative intensity frames.
#[derive(Debug, Clone)]
pub struct FrameStack {
    grid: PixelGrid,
    /// Frame-major, row-major pixel data; length `frames * grid.len()`.
    data: Vec<f32>,
    labels: Option<Vec<String>>,
}

impl FrameStack {
    pub fn new(grid: PixelGrid, data: Vec<f32>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = grid.len();
        if n == 0 || data.len() % n != 0 {
            return Err(Error::ShapeMismatch {
                expected: format!("a multiple of {n} pixels"),
                got: format!("{}", data.len()),
            });
        }
        let frames = data.len() / n;
        if let Some(labels) = &labels {
            if labels.len() != frames {
                return Err(Error::ShapeMismatch {
                    expected: format!("{frames} labels"),
                    got: format!("{}", labels.len()),
                });
            }
        }
        for (i, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("frame {} pixel {}", i / n, i % n)));
            }
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative intensity {v} in frame {} pixel {}",
                    i / n,
                    i % n
                )));
            }
        }
        Ok(Self { grid, data, labels })
    }

    /// Builds a stack frame by frame without validation of non-negativity
    /// (used by the synthesizer, which guarantees it).
    pub(crate) fn from_parts_unchecked(grid: PixelGrid, data: Vec<f32>) -> Self {
        debug_assert!(data.len() % grid.len() == 0);
        Self { grid, data, labels: None }
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    pub fn num_frames(&self) -> usize {
        self.data.len() / self.grid.len()
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        let n = self.grid.len();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn label(&self, t: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[t].as_str())
    }

    pub fn raw_data(&self) -> &[f32] {
        &self.data
    }

    /// Frame `t` as a 2D field in `f64`.
    pub fn frame_field(&self, t: usize) -> Field2D {
        let vals: Vec<f64> = self.frame(t).iter().map(|&v| v as f64).collect();
        Field2D::from_vec(self.grid.nx(), self.grid.ny(), vals).expect("stack layout")
    }

    /// Crops every frame to the rectangle `[ix0, ix0+nx)` x `[iy0, iy0+ny)`.
    pub fn crop(&self, ix0: usize, iy0: usize, nx: usize, ny: usize) -> Result<FrameStack> {
        if nx < 1 || ny < 1 || ix0 + nx > self.grid.nx() || iy0 + ny > self.grid.ny() {
            return Err(Error::RangeError(format!(
                "crop [{ix0}+{nx}, {iy0}+{ny}) outside {}x{} grid",
                self.grid.nx(),
                self.grid.ny()
            )));
        }
        let grid = PixelGrid::new(
            nx,
            ny,
            self.grid.dx(),
            self.grid.dy(),
            self.grid.x(ix0),
            self.grid.y(iy0),
            self.grid.unit(),
        )?;
        let mut data = Vec::with_capacity(self.num_frames() * nx * ny);
        for t in 0..self.num_frames() {
            let src = self.frame(t);
            for iy in iy0..iy0 + ny {
                let row = &src[iy * self.grid.nx()..][ix0..ix0 + nx];
                data.extend_from_slice(row);
            }
        }
        Ok(FrameStack { grid, data, labels: self.labels.clone() })
    }

    /// Integer-bins every frame by `bx` x `by`, summing intensities within
    /// each bin (photon-count semantics). Trailing pixels that do not fill a
    /// whole bin are dropped.
    pub fn bin(&self, bx: usize, by: usize) -> Result<FrameStack> {
        if bx < 1 || by < 1 {
            return Err(Error::InvalidParameter("bin factors must be at least 1".into()));
        }
        let nx = self.grid.nx() / bx;
        let ny = self.grid.ny() / by;
        if nx < 1 || ny < 1 {
            return Err(Error::RangeError(format!(
                "bin {bx}x{by} leaves no pixels on a {}x{} grid",
                self.grid.nx(),
                self.grid.ny()
            )));
        }
        // Bin centers: average of the member pixel centers.
        let x0 = self.grid.x0() + 0.5 * (bx as f64 - 1.0) * self.grid.dx();
        let y0 = self.grid.y0() + 0.5 * (by as f64 - 1.0) * self.grid.dy();
        let grid = PixelGrid::new(
            nx,
            ny,
            self.grid.dx() * bx as f64,
            self.grid.dy() * by as f64,
            x0,
            y0,
            self.grid.unit(),
        )?;
        let mut data = Vec::with_capacity(self.num_frames() * nx * ny);
        for t in 0..self.num_frames() {
            let src = self.frame(t);
            for oy in 0..ny {
                for ox in 0..nx {
                    let mut acc = 0.0f32;
                    for jy in 0..by {
                        let row = (oy * by + jy) * self.grid.nx();
                        for jx in 0..bx {
                            acc += src[row + ox * bx + jx];
                        }
                    }
                    data.push(acc);
                }
            }
        }
        Ok(FrameStack { grid, data, labels: self.labels.clone() })
    }
}

/// One-pass supplier of intensity frames in stack order.
///
/// `next_frame_into` fills `out` (length `grid.len()`, row-major, `f64`) and
/// returns `false` once the source is exhausted. `rewind` restarts the pass.
pub trait FrameSource {
    fn grid(&self) -> &PixelGrid;

    /// Number of frames a full pass will yield.
    fn num_frames(&self) -> usize;

    fn next_frame_into(&mut self, out: &mut [f64]) -> Result<bool>;

    fn rewind(&mut self) -> Result<()>;

    /// Label for diagnostics (file name, frame id), if the source has one.
    fn frame_label(&self, _index: usize) -> Option<String> {
        None
    }
}

/// In-memory pass over a [`FrameStack`].
pub struct StackSource<'a> {
    stack: &'a FrameStack,
    pos: usize,
}

impl<'a> StackSource<'a> {
    pub fn new(stack: &'a FrameStack) -> Self {
        Self { stack, pos: 0 }
    }
}

impl FrameSource for StackSource<'_> {
    fn grid(&self) -> &PixelGrid {
        self.stack.grid()
    }

    fn num_frames(&self) -> usize {
        self.stack.num_frames()
    }

    fn next_frame_into(&mut self, out: &mut [f64]) -> Result<bool> {
        if self.pos >= self.stack.num_frames() {
            return Ok(false);
        }
        let frame = self.stack.frame(self.pos);
        debug_assert_eq!(out.len(), frame.len());
        for (o, &v) in out.iter_mut().zip(frame) {
            *o = v as f64;
        }
        self.pos += 1;
        Ok(true)
    }

    fn rewind(&mut self) -> Result<()> {
        self.pos = 0;
        Ok(())
    }

    fn frame_label(&self, index: usize) -> Option<String> {
        self.stack.label(index).map(str::to_owned)
    }
}
