//! Flattened two-point matrices: covariance and |G1|.

use faer::MatRef;

use crate::error::{Error, Result};
use crate::grid::PixelGrid;

/// What the matrix entries mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovKind {
    /// Intensity covariance Cov(rho_n, rho_m).
    Covariance,
    /// Modulus of the field correlation |G1(rho_n, rho_m)|; entries >= 0.
    AbsG1,
}

/// Dense symmetric `NaN`-free `N x N` matrix over flat pixel indices.
///
/// Stored row-major; since the matrix is symmetric the same buffer doubles
/// as a column-major view, which is handed to the eigensolver without a copy.
#[derive(Debug, Clone)]
pub struct FlatCovariance {
    grid: PixelGrid,
    kind: CovKind,
    data: Vec<f64>,
}

impl FlatCovariance {
    /// Wraps an existing buffer; validates shape, finiteness, symmetry, and
    /// (for [`CovKind::AbsG1`]) non-negativity.
    pub fn new(grid: PixelGrid, kind: CovKind, data: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if data.len() != n * n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n}x{n} matrix ({} values)", n * n),
                got: format!("{}", data.len()),
            });
        }
        let cov = Self { grid, kind, data };
        cov.validate_entries()?;
        cov.validate_symmetry(SYMMETRY_RTOL)?;
        Ok(cov)
    }

    /// Wraps a buffer known symmetric by construction (mirrored assembly).
    pub(crate) fn from_symmetric_parts(grid: PixelGrid, kind: CovKind, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len() * grid.len());
        Self { grid, kind, data }
    }

    fn validate_entries(&self) -> Result<()> {
        for (i, &v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                let n = self.grid.len();
                return Err(Error::NonFinite(format!("matrix entry ({}, {})", i / n, i % n)));
            }
            if self.kind == CovKind::AbsG1 && v < 0.0 {
                let n = self.grid.len();
                return Err(Error::InvalidParameter(format!(
                    "|G1| entry ({}, {}) is negative: {v}",
                    i / n,
                    i % n
                )));
            }
        }
        Ok(())
    }

    /// Errors if `max |a - a^T|` exceeds `rtol * max |a|`.
    pub fn validate_symmetry(&self, rtol: f64) -> Result<()> {
        let n = self.grid.len();
        let mut max_abs = 0.0f64;
        let mut max_dev = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                let a = self.data[i * n + j];
                let b = self.data[j * n + i];
                max_abs = max_abs.max(a.abs());
                max_dev = max_dev.max((a - b).abs());
            }
        }
        let tol = rtol * max_abs.max(f64::MIN_POSITIVE);
        if max_dev > tol {
            return Err(Error::Asymmetric { max_dev, tol });
        }
        Ok(())
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    pub fn kind(&self) -> CovKind {
        self.kind
    }

    /// Matrix order `N` (= pixel count).
    pub fn order(&self) -> usize {
        self.grid.len()
    }

    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.data[n * self.order() + m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_parts(self) -> (PixelGrid, CovKind, Vec<f64>) {
        (self.grid, self.kind, self.data)
    }

    /// Zero-copy view for linear algebra. Valid because the buffer is
    /// symmetric: its column-major reading is the transpose, which is equal.
    pub fn as_mat_ref(&self) -> MatRef<'_, f64> {
        let n = self.order();
        MatRef::from_column_major_slice(&self.data, n, n)
    }

    /// Diagonal as a flat vector (mean intensity for `AbsG1` per Eq. of the
    /// diagonal identity; variances for covariance).
    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.order();
        (0..n).map(|i| self.data[i * n + i]).collect()
    }

    pub fn trace(&self) -> f64 {
        let n = self.order();
        (0..n).map(|i| self.data[i * n + i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Correlation submatrix between all pixel pairs on one grid line.
    ///
    /// `fixed_axis` selects which coordinate is held constant; `fixed_value`
    /// is snapped to the nearest pixel row/column (the snap is reported in
    /// the result). The diagonal of the cut is the intensity profile along
    /// that line.
    pub fn cut_1d(&self, fixed_axis: Axis, fixed_value: f64) -> Result<LineCut> {
        let n = self.order();
        let (fixed_index, snapped, coords, line_len): (usize, f64, Vec<f64>, usize) =
            match fixed_axis {
                Axis::Y => {
                    let iy = self.grid.snap_y(fixed_value)?;
                    let coords = (0..self.grid.nx()).map(|ix| self.grid.x(ix)).collect();
                    (iy, self.grid.y(iy), coords, self.grid.nx())
                }
                Axis::X => {
                    let ix = self.grid.snap_x(fixed_value)?;
                    let coords = (0..self.grid.ny()).map(|iy| self.grid.y(iy)).collect();
                    (ix, self.grid.x(ix), coords, self.grid.ny())
                }
            };
        let flat_of = |k: usize| -> usize {
            match fixed_axis {
                Axis::Y => fixed_index * self.grid.nx() + k,
                Axis::X => k * self.grid.nx() + fixed_index,
            }
        };
        let mut matrix = Vec::with_capacity(line_len * line_len);
        for a in 0..line_len {
            let na = flat_of(a);
            for b in 0..line_len {
                matrix.push(self.data[na * n + flat_of(b)]);
            }
        }
        Ok(LineCut { axis: fixed_axis, snapped_coordinate: snapped, coords, matrix })
    }
}

/// Which coordinate a 1D cut holds fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Result of [`FlatCovariance::cut_1d`]: correlations over (coord, coord').
#[derive(Debug, Clone)]
pub struct LineCut {
    pub axis: Axis,
    /// Physical coordinate of the line actually used after pixel snapping.
    pub snapped_coordinate: f64,
    /// Physical coordinates along the free axis.
    pub coords: Vec<f64>,
    /// Row-major `len x len` correlation submatrix, `len = coords.len()`.
    pub matrix: Vec<f64>,
}

impl LineCut {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.matrix[a * self.len() + b]
    }

    /// Diagonal of the cut: the intensity profile along the line.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.len()).map(|a| self.get(a, a)).collect()
    }

    /// Anti-diagonal values, pairing coordinate `c` with `-c` (index-wise:
    /// `a` with `len-1-a`).
    pub fn anti_diagonal(&self) -> Vec<f64> {
        let l = self.len();
        (0..l).map(|a| self.get(a, l - 1 - a)).collect()
    }
}

/// Relative tolerance used when validating symmetry of assembled matrices.
pub const SYMMETRY_RTOL: f64 = 1e-10;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisUnit;

    fn grid(nx: usize, ny: usize) -> PixelGrid {
        PixelGrid::centered(nx, ny, 1.0, 1.0, AxisUnit::Meters).unwrap()
    }

    #[test]
    fn rejects_asymmetric() {
        let g = grid(2, 1);
        let data = vec![1.0, 0.5, 0.4, 1.0];
        assert!(matches!(
            FlatCovariance::new(g, CovKind::Covariance, data),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn rejects_negative_absg1() {
        let g = grid(2, 1);
        let data = vec![1.0, -0.5, -0.5, 1.0];
        assert!(FlatCovariance::new(g.clone(), CovKind::AbsG1, data.clone()).is_err());
        assert!(FlatCovariance::new(g, CovKind::Covariance, data).is_ok());
    }

    #[test]
    fn cut_diagonal_is_intensity_profile() {
        // |G1|(n, m) with a known diagonal
        let g = grid(3, 3);
        let n = 9;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = (i + 1) as f64;
        }
        let cov = FlatCovariance::new(g.clone(), CovKind::AbsG1, data).unwrap();
        // central row: y = 0 snaps to iy = 1, pixels 3, 4, 5
        let cut = cov.cut_1d(Axis::Y, 0.1).unwrap();
        assert_eq!(cut.snapped_coordinate, 0.0);
        assert_eq!(cut.len(), 3);
        assert_eq!(cut.diagonal(), vec![4.0, 5.0, 6.0]);
        // central column: x = 0 snaps to ix = 1, pixels 1, 4, 7
        let cut = cov.cut_1d(Axis::X, 0.0).unwrap();
        assert_eq!(cut.diagonal(), vec![2.0, 5.0, 8.0]);
        assert!(cov.cut_1d(Axis::X, 9.0).is_err());
    }

    #[test]
    fn cut_extracts_cross_correlations() {
        let g = grid(2, 2);
        // build symmetric matrix with distinct entries
        let n = 4;
        let mut data = vec![0.0; 16];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = (i * j) as f64 + 1.0;
            }
        }
        let cov = FlatCovariance::new(g, CovKind::Covariance, data).unwrap();
        let cut = cov.cut_1d(Axis::Y, -0.5).unwrap(); // iy = 0: pixels 0, 1
        assert_eq!(cut.get(0, 1), 1.0);
        assert_eq!(cut.get(1, 1), 2.0);
        let anti = cut.anti_diagonal();
        assert_eq!(anti, vec![cut.get(0, 1), cut.get(1, 0)]);
    }
}
