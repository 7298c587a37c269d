//! Hermite-Gauss mode profiles on a pixel grid.
//!
//! The reference mode family used by the end-to-end oracle tests and for
//! lobe-count comparisons against reconstructed far-field modes.

use crate::error::{Error, Result};
use crate::grid::{Field2D, PixelGrid};
use crate::modes::{ModeNormalization, ModeSet};

/// Physicists' Hermite polynomial `H_n` at `x`.
fn hermite(n: u32, x: f64) -> f64 {
    let mut h_prev = 1.0f64;
    if n == 0 {
        return h_prev;
    }
    let mut h = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * h - 2.0 * k as f64 * h_prev;
        h_prev = h;
        h = next;
    }
    h
}

/// HG_{mx,my} profile with waist `w`, L2-normalized on the grid.
///
/// The 1D factor is `H_m(sqrt(2) x / w) exp(-x^2 / w^2)`; `mx` counts sign
/// changes along x, `my` along y.
pub fn hg_profile(grid: &PixelGrid, mx: u32, my: u32, waist: f64) -> Result<Field2D> {
    if !(waist > 0.0) || !waist.is_finite() {
        return Err(Error::InvalidParameter(format!("waist must be positive, got {waist}")));
    }
    let mut field = Field2D::from_fn(grid.nx(), grid.ny(), |ix, iy| {
        let x = grid.x(ix) / waist;
        let y = grid.y(iy) / waist;
        hermite(mx, std::f64::consts::SQRT_2 * x)
            * hermite(my, std::f64::consts::SQRT_2 * y)
            * (-(x * x + y * y)).exp()
    });
    let norm_sq: f64 =
        field.as_slice().iter().map(|v| v * v).sum::<f64>() * grid.pixel_area();
    if !(norm_sq > 0.0) {
        return Err(Error::Numerical(
            "Hermite-Gauss profile vanished on the grid; waist too small for the pitch".into(),
        ));
    }
    field.scale(1.0 / norm_sq.sqrt());
    Ok(field)
}

/// Index pairs (mx, my) in the canonical order: ascending total order
/// `mx + my`, x-index descending within a group, i.e.
/// (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
pub fn hg_index_order(count: usize) -> Vec<(u32, u32)> {
    let mut order = Vec::with_capacity(count);
    let mut total = 0u32;
    'outer: loop {
        for my in 0..=total {
            let mx = total - my;
            order.push((mx, my));
            if order.len() == count {
                break 'outer;
            }
        }
        total += 1;
    }
    order
}

/// Mode set of the first `count` HG modes (canonical order) with the given
/// weights, descending.
pub fn hg_modeset(
    grid: &PixelGrid,
    count: usize,
    waist: f64,
    weights: Vec<f64>,
) -> Result<ModeSet> {
    if weights.len() != count {
        return Err(Error::ShapeMismatch {
            expected: format!("{count} weights"),
            got: format!("{}", weights.len()),
        });
    }
    let profiles = hg_index_order(count)
        .into_iter()
        .map(|(mx, my)| hg_profile(grid, mx, my, waist))
        .collect::<Result<Vec<_>>>()?;
    ModeSet::new(grid.clone(), weights, profiles, ModeNormalization::UnitL2Modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisUnit;
    use crate::modes::fidelity;

    fn grid() -> PixelGrid {
        PixelGrid::centered(48, 48, 0.2, 0.2, AxisUnit::Meters).unwrap()
    }

    #[test]
    fn hg00_is_positive_gaussian() {
        let g = grid();
        let u = hg_profile(&g, 0, 0, 1.5).unwrap();
        assert!(u.as_slice().iter().all(|&v| v > 0.0));
        let center = u.get(24, 24);
        assert!(u.as_slice().iter().all(|&v| v <= center * 1.0001));
    }

    #[test]
    fn hg_modes_are_orthonormal_on_grid() {
        let g = grid();
        let w = 1.2;
        let order = hg_index_order(6);
        let profiles: Vec<_> =
            order.iter().map(|&(mx, my)| hg_profile(&g, mx, my, w).unwrap()).collect();
        for a in 0..profiles.len() {
            for b in 0..=a {
                let f = fidelity(&g, &profiles[a], &profiles[b]).unwrap();
                if a == b {
                    assert!((f - 1.0).abs() < 1e-12);
                } else {
                    // analytic orthogonality; grid sampling of these smooth,
                    // fully decayed profiles keeps it tight
                    assert!(f < 1e-9, "modes {a} and {b}: {f}");
                }
            }
        }
    }

    #[test]
    fn hg01_changes_sign_across_axis() {
        let g = grid();
        let u = hg_profile(&g, 1, 0, 1.5).unwrap();
        // antisymmetric along x at fixed y
        let v_left = u.get(10, 24);
        let v_right = u.get(37, 24);
        assert!(v_left * v_right < 0.0);
    }

    #[test]
    fn index_order_walks_total_order_groups() {
        let order = hg_index_order(6);
        assert_eq!(order, vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
    }
}
