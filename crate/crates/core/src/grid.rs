//! Pixel grid, row-major flattening, and 2D field storage.
//!
//! Every pixel of an `nx` x `ny` grid gets a flat index `n = iy * nx + ix`
//! (row-major, y-outer). All two-point quantities in this crate are stored as
//! dense matrices over that flat index, and eigenvectors are folded back to
//! 2D with the inverse map. The physical pitch (`dx`, `dy`) and the origin
//! (`x0`, `y0`) ride along so downstream output is in physical units.

use crate::error::{Error, Result};

/// Physical meaning of the grid axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisUnit {
    /// Near-field transverse position, meters.
    Meters,
    /// Far-field external angle, radians.
    Radians,
}

impl AxisUnit {
    /// Container tag byte (0 = meters, 1 = radians).
    pub fn tag(self) -> u8 {
        match self {
            AxisUnit::Meters => 0,
            AxisUnit::Radians => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(AxisUnit::Meters),
            1 => Ok(AxisUnit::Radians),
            other => Err(Error::InvalidParameter(format!("unknown axis unit tag {other}"))),
        }
    }
}

/// Rectangular pixel grid with physical coordinates.
///
/// `x0`, `y0` are the physical coordinates of the center of pixel (0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    x0: f64,
    y0: f64,
    unit: AxisUnit,
}

impl PixelGrid {
    pub fn new(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        x0: f64,
        y0: f64,
        unit: AxisUnit,
    ) -> Result<Self> {
        if nx < 1 || ny < 1 {
            return Err(Error::InvalidParameter(format!(
                "grid must have at least one pixel per axis, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0) || !(dy > 0.0) || !dx.is_finite() || !dy.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "pixel pitch must be positive and finite, got dx={dx}, dy={dy}"
            )));
        }
        if !x0.is_finite() || !y0.is_finite() {
            return Err(Error::InvalidParameter("grid origin must be finite".into()));
        }
        Ok(Self { nx, ny, dx, dy, x0, y0, unit })
    }

    /// Grid of `nx` x `ny` pixels whose centers are symmetric about zero.
    pub fn centered(nx: usize, ny: usize, dx: f64, dy: f64, unit: AxisUnit) -> Result<Self> {
        let x0 = -0.5 * (nx as f64 - 1.0) * dx;
        let y0 = -0.5 * (ny as f64 - 1.0) * dy;
        Self::new(nx, ny, dx, dy, x0, y0, unit)
    }

    /// Centered grid spanning `[-half_extent, half_extent]` per axis.
    pub fn centered_span(nx: usize, ny: usize, half_extent: f64, unit: AxisUnit) -> Result<Self> {
        if !(half_extent > 0.0) {
            return Err(Error::InvalidParameter("grid half extent must be positive".into()));
        }
        let dx = 2.0 * half_extent / nx as f64;
        let dy = 2.0 * half_extent / ny as f64;
        Self::centered(nx, ny, dx, dy, unit)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn unit(&self) -> AxisUnit {
        self.unit
    }

    /// Total pixel count `N = nx * ny`.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Area of one pixel, `dx * dy`.
    pub fn pixel_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Physical x coordinate of the center of column `ix`.
    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.dx
    }

    /// Physical y coordinate of the center of row `iy`.
    pub fn y(&self, iy: usize) -> f64 {
        self.y0 + iy as f64 * self.dy
    }

    /// Row-major flat index of pixel (`ix`, `iy`): `n = iy * nx + ix`.
    pub fn flat_index(&self, ix: usize, iy: usize) -> Result<usize> {
        if ix >= self.nx || iy >= self.ny {
            return Err(Error::PixelOutOfRange { ix, iy, nx: self.nx, ny: self.ny });
        }
        Ok(iy * self.nx + ix)
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn unflat_index(&self, n: usize) -> Result<(usize, usize)> {
        if n >= self.len() {
            return Err(Error::FlatIndexOutOfRange { index: n, len: self.len() });
        }
        Ok((n % self.nx, n / self.nx))
    }

    /// Nearest pixel column to physical coordinate `x`; errors outside the
    /// grid extent (half a pixel beyond the outermost centers).
    pub fn snap_x(&self, x: f64) -> Result<usize> {
        snap(x, self.x0, self.dx, self.nx)
    }

    /// Nearest pixel row to physical coordinate `y`.
    pub fn snap_y(&self, y: f64) -> Result<usize> {
        snap(y, self.y0, self.dy, self.ny)
    }

    /// True if `other` addresses the same pixels in the same physical frame.
    pub fn same_geometry(&self, other: &PixelGrid) -> bool {
        self == other
    }

    pub fn ensure_same(&self, other: &PixelGrid, context: &str) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{context}: {}x{} vs {}x{}",
                self.nx, self.ny, other.nx, other.ny
            )))
        }
    }
}

fn snap(value: f64, origin: f64, pitch: f64, count: usize) -> Result<usize> {
    let idx = (value - origin) / pitch;
    let min = origin - 0.5 * pitch;
    let max = origin + (count as f64 - 0.5) * pitch;
    if !(idx >= -0.5 && idx < count as f64 - 0.5 + 1e-9) {
        return Err(Error::CoordinateOutOfRange { value, min, max });
    }
    Ok(idx.round().min(count as f64 - 1.0).max(0.0) as usize)
}

/// Dense row-major `ny` x `nx` array of reals; mode profiles, mean maps and
/// single frames all use this layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl Field2D {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self { nx, ny, data: vec![0.0; nx * ny] }
    }

    pub fn from_vec(nx: usize, ny: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nx * ny {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values for a {nx}x{ny} field", nx * ny),
                got: format!("{}", data.len()),
            });
        }
        Ok(Self { nx, ny, data })
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                data.push(f(ix, iy));
            }
        }
        Self { nx, ny, data }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.data[iy * self.nx + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, value: f64) {
        self.data[iy * self.nx + ix] = value;
    }

    /// Row-major flat view; index `n` is the grid's flat pixel index.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, iy: usize) -> &[f64] {
        &self.data[iy * self.nx..(iy + 1) * self.nx]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    pub fn matches_grid(&self, grid: &PixelGrid) -> bool {
        self.nx == grid.nx() && self.ny == grid.ny()
    }

    pub fn ensure_matches(&self, grid: &PixelGrid, context: &str) -> Result<()> {
        if self.matches_grid(grid) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: format!("{context}: {}x{} field", grid.nx(), grid.ny()),
                got: format!("{}x{}", self.nx, self.ny),
            })
        }
    }
}

/// Fold a flat length-N vector into a 2D field: `out[iy][ix] = v[iy*nx + ix]`.
///
/// Inverse of [`unfold_field`]; both are pure reindexing, no arithmetic.
pub fn fold_vector(grid: &PixelGrid, v: &[f64]) -> Result<Field2D> {
    if v.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("vector of length {}", grid.len()),
            got: format!("{}", v.len()),
        });
    }
    Field2D::from_vec(grid.nx(), grid.ny(), v.to_vec())
}

/// Unfold a 2D field to the flat vector: `v[iy*nx + ix] = f[iy][ix]`.
pub fn unfold_field(grid: &PixelGrid, field: &Field2D) -> Result<Vec<f64>> {
    field.ensure_matches(grid, "unfold")?;
    Ok(field.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> PixelGrid {
        PixelGrid::new(3, 3, 1.0, 1.0, 0.0, 0.0, AxisUnit::Meters).unwrap()
    }

    #[test]
    fn flat_index_row_major() {
        let g = grid3();
        assert_eq!(g.flat_index(0, 0).unwrap(), 0);
        // last pixel of the 3x3 numbering
        assert_eq!(g.flat_index(2, 2).unwrap(), 8);
        // first pixel of the second row
        assert_eq!(g.flat_index(0, 1).unwrap(), 3);
    }

    #[test]
    fn unflat_index_inverts() {
        let g = grid3();
        assert_eq!(g.unflat_index(4).unwrap(), (1, 1));
        assert_eq!(g.unflat_index(0).unwrap(), (0, 0));

        // 5x2 grid, n = 7: brute-force enumeration of all 10 indices
        let g52 = PixelGrid::new(5, 2, 1.0, 1.0, 0.0, 0.0, AxisUnit::Meters).unwrap();
        let mut expected = None;
        for iy in 0..2 {
            for ix in 0..5 {
                if g52.flat_index(ix, iy).unwrap() == 7 {
                    expected = Some((ix, iy));
                }
            }
        }
        assert_eq!(g52.unflat_index(7).unwrap(), expected.unwrap());
        assert_eq!(g52.unflat_index(7).unwrap(), (2, 1));
    }

    #[test]
    fn flat_unflat_identity_exhaustive() {
        for (nx, ny) in [(1, 1), (3, 3), (5, 2), (2, 5), (7, 4)] {
            let g = PixelGrid::new(nx, ny, 0.5, 0.25, -1.0, 2.0, AxisUnit::Radians).unwrap();
            for n in 0..g.len() {
                let (ix, iy) = g.unflat_index(n).unwrap();
                assert_eq!(g.flat_index(ix, iy).unwrap(), n);
            }
            for iy in 0..ny {
                for ix in 0..nx {
                    let n = g.flat_index(ix, iy).unwrap();
                    assert_eq!(g.unflat_index(n).unwrap(), (ix, iy));
                }
            }
        }
    }

    #[test]
    fn out_of_range_errors() {
        let g = grid3();
        assert!(g.flat_index(3, 0).is_err());
        assert!(g.flat_index(0, 3).is_err());
        assert!(g.unflat_index(9).is_err());
    }

    #[test]
    fn fold_vector_definition() {
        let g = PixelGrid::new(2, 2, 1.0, 1.0, 0.0, 0.0, AxisUnit::Meters).unwrap();
        let f = fold_vector(&g, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.row(0), &[1.0, 2.0]);
        assert_eq!(f.row(1), &[3.0, 4.0]);

        let zeros = fold_vector(&g, &[0.0; 4]).unwrap();
        assert!(zeros.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fold_unit_vector_lands_at_unflat_position() {
        let g = grid3();
        let mut e4 = vec![0.0; 9];
        e4[4] = 1.0;
        let f = fold_vector(&g, &e4).unwrap();
        let (ix, iy) = g.unflat_index(4).unwrap();
        for jy in 0..3 {
            for jx in 0..3 {
                let expected = if (jx, jy) == (ix, iy) { 1.0 } else { 0.0 };
                assert_eq!(f.get(jx, jy), expected);
            }
        }
        assert_eq!((ix, iy), (1, 1));
    }

    #[test]
    fn fold_rejects_length_mismatch() {
        let g = grid3();
        assert!(fold_vector(&g, &[0.0; 8]).is_err());
    }

    #[test]
    fn fold_unfold_roundtrip_exact() {
        let g = PixelGrid::new(4, 3, 1.0, 1.0, 0.0, 0.0, AxisUnit::Meters).unwrap();
        let v: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let f = fold_vector(&g, &v).unwrap();
        assert_eq!(unfold_field(&g, &f).unwrap(), v);
    }

    #[test]
    fn snap_to_nearest_pixel() {
        let g = PixelGrid::centered(5, 5, 1.0, 1.0, AxisUnit::Meters).unwrap();
        // centers at -2, -1, 0, 1, 2
        assert_eq!(g.snap_x(0.0).unwrap(), 2);
        assert_eq!(g.snap_x(0.49).unwrap(), 2);
        assert_eq!(g.snap_x(0.51).unwrap(), 3);
        assert_eq!(g.snap_x(-2.49).unwrap(), 0);
        assert!(g.snap_x(2.7).is_err());
        assert!(g.snap_x(-2.7).is_err());
    }

    #[test]
    fn centered_grid_is_symmetric() {
        let g = PixelGrid::centered_span(64, 64, 35e-3, AxisUnit::Radians).unwrap();
        assert!((g.x(0) + g.x(63)).abs() < 1e-15);
        assert!((g.x(63) - (35e-3 - 0.5 * g.dx())).abs() < 1e-12);
    }
}
