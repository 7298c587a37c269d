//! LP modes of a weakly guiding step-index fiber.
//!
//! Cutoffs of LP(l,m) are the zeros of J_{l-1} (with the LP01 cutoff at
//! V = 0); guided-mode transverse parameters (u, w) solve the weak-guidance
//! dispersion relation
//!
//! ```text
//! u J_{l-1}(u) / J_l(u) = -w K_{l-1}(w) / K_l(w),   u^2 + w^2 = V^2,
//! ```
//!
//! found by bisection inside the (j_{l-1,m}, j_{l,m}) Bessel-zero bracket,
//! which contains exactly one root. Profiles are J_l inside the core and
//! K_l outside, continuous at the interface, with cos/sin azimuthal factors.
//!
//! Mode counting: each l != 0 entry stands for the +-l orientation pair and
//! counts twice; polarization is not counted (the reconstruction sees
//! intensity modes of one scrambled field). Note that this enumerated count
//! is NOT what the V-number estimate [`v_number_mode_estimate`] returns; the
//! quoted "mode number from V" figure for a multimode fiber comes from the
//! (4/pi^2) V^2 estimate, which this module also provides.

use crate::bessel::{bessel_j, bessel_j_zeros, bessel_k, bisect};
use crate::error::{Error, Result};
use crate::grid::{Field2D, PixelGrid};
use crate::modes::{ModeNormalization, ModeSet};

/// Step-index fiber description plus the near-field sampling grid.
#[derive(Debug, Clone)]
pub struct FiberParams {
    /// Core radius `a` in meters.
    pub core_radius: f64,
    pub numerical_aperture: f64,
    /// Vacuum wavelength in meters.
    pub wavelength: f64,
    /// Near-field grid (meters) the profiles are sampled on.
    pub grid: PixelGrid,
}

impl FiberParams {
    /// Fiber parameters from the core/cladding index pair.
    pub fn from_indices(
        core_radius: f64,
        n_core: f64,
        n_clad: f64,
        wavelength: f64,
        grid: PixelGrid,
    ) -> Result<Self> {
        if !(n_core > n_clad) || !(n_clad >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need n_core > n_clad >= 1, got {n_core}, {n_clad}"
            )));
        }
        let na = (n_core * n_core - n_clad * n_clad).sqrt();
        let p = Self { core_radius, numerical_aperture: na, wavelength, grid };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.core_radius > 0.0) {
            return Err(Error::InvalidParameter("core radius must be positive".into()));
        }
        if !(self.numerical_aperture > 0.0 && self.numerical_aperture < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "numerical aperture must be in (0, 1), got {}",
                self.numerical_aperture
            )));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidParameter("wavelength must be positive".into()));
        }
        Ok(())
    }

    /// Normalized frequency `V = 2 pi a NA / lambda`.
    pub fn v_number(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.core_radius * self.numerical_aperture / self.wavelength
    }
}

/// One guided LP mode (representing the +-l orientation pair for l != 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpMode {
    /// Azimuthal index.
    pub l: u32,
    /// Radial index, starting at 1.
    pub m: u32,
    /// Cutoff V number (zero of J_{l-1}; 0 for LP01).
    pub cutoff_v: f64,
}

impl LpMode {
    /// 2 for l != 0 (cos/sin orientations), 1 for l = 0.
    pub fn degeneracy(&self) -> usize {
        if self.l == 0 { 1 } else { 2 }
    }
}

/// Azimuthal orientation of an l != 0 profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Cos,
    Sin,
}

/// Cutoff V values for LP(l, m): m-th zero of J_{l-1}, where for l = 0 the
/// zero of J_{-1} = -J_1 at the origin makes LP01 cut off at V = 0.
fn cutoffs_for_l(l: u32, v_max: f64) -> Vec<f64> {
    match l {
        0 => {
            let mut c = vec![0.0];
            c.extend(bessel_j_zeros(1, v_max));
            c
        }
        _ => bessel_j_zeros(l - 1, v_max),
    }
}

/// Enumerates every guided LP mode (cutoff strictly below V), sorted by
/// cutoff then azimuthal index.
pub fn lp_cutoffs(params: &FiberParams) -> Result<Vec<LpMode>> {
    params.validate()?;
    let v = params.v_number();
    let mut modes = Vec::new();
    let mut l = 0u32;
    loop {
        let cutoffs = cutoffs_for_l(l, v);
        let guided: Vec<f64> = cutoffs.into_iter().filter(|&c| c < v).collect();
        if guided.is_empty() && l > 0 {
            break;
        }
        for (i, cutoff_v) in guided.iter().enumerate() {
            modes.push(LpMode { l, m: i as u32 + 1, cutoff_v: *cutoff_v });
        }
        l += 1;
        if l > 200 {
            return Err(Error::Numerical("azimuthal index runaway in cutoff enumeration".into()));
        }
    }
    modes.sort_by(|a, b| {
        a.cutoff_v
            .partial_cmp(&b.cutoff_v)
            .unwrap()
            .then(a.l.cmp(&b.l))
    });
    Ok(modes)
}

/// Number of guided intensity modes by enumeration, counting each l != 0
/// entry twice (orientations) and polarization not at all.
pub fn mode_count(params: &FiberParams) -> Result<usize> {
    Ok(lp_cutoffs(params)?.iter().map(LpMode::degeneracy).sum())
}

/// Closed-form mode-number estimate from the V number, `(4 / pi^2) V^2`.
///
/// This is the figure usually quoted as "the number of modes obtained from
/// the V number" for a highly multimode step-index fiber; for the 8.2 um
/// core at 532 nm with NA = 0.14 it gives 18.6, i.e. 19 modes.
pub fn v_number_mode_estimate(params: &FiberParams) -> Result<f64> {
    params.validate()?;
    let v = params.v_number();
    Ok(4.0 * v * v / (std::f64::consts::PI * std::f64::consts::PI))
}

/// Transverse parameters of a guided mode.
#[derive(Debug, Clone, Copy)]
pub struct LpSolution {
    pub u: f64,
    pub w: f64,
}

fn j_lm1(l: u32, x: f64) -> f64 {
    // J_{l-1}, with J_{-1} = -J_1
    if l == 0 { -bessel_j(1, x) } else { bessel_j(l - 1, x) }
}

/// Dispersion function g(u) = u J_{l-1}(u)/J_l(u) + w K_{l-1}(w)/K_l(w).
fn dispersion(l: u32, v: f64, u: f64) -> f64 {
    let w2 = v * v - u * u;
    let w = w2.max(0.0).sqrt();
    let lhs = u * j_lm1(l, u) / bessel_j(l, u);
    let rhs = if w > 0.0 {
        let kl = bessel_k(l, w).unwrap_or(f64::INFINITY);
        let klm1 = if l == 0 { bessel_k(1, w).unwrap_or(f64::INFINITY) } else {
            bessel_k(l - 1, w).unwrap_or(f64::INFINITY)
        };
        if kl.is_finite() && klm1.is_finite() && kl > 0.0 {
            w * klm1 / kl
        } else {
            // both K underflow far from cutoff; their ratio stays ~1
            w
        }
    } else {
        0.0
    };
    lhs + rhs
}

/// Residual of the dispersion relation at u, normalized by the term sizes.
pub fn dispersion_residual(params: &FiberParams, l: u32, u: f64) -> f64 {
    let v = params.v_number();
    let w = (v * v - u * u).max(0.0).sqrt();
    let lhs = u * j_lm1(l, u) / bessel_j(l, u);
    let rhs = if w > 0.0 {
        let kl = bessel_k(l, w).unwrap_or(f64::NAN);
        let klm1 =
            if l == 0 { bessel_k(1, w).unwrap_or(f64::NAN) } else { bessel_k(l - 1, w).unwrap_or(f64::NAN) };
        w * klm1 / kl
    } else {
        0.0
    };
    (lhs + rhs).abs() / (lhs.abs() + rhs.abs() + 1.0)
}

/// Solves the dispersion relation for LP(l, m) at the fiber's V number.
pub fn solve_lp(params: &FiberParams, l: u32, m: u32) -> Result<LpSolution> {
    params.validate()?;
    if m < 1 {
        return Err(Error::RangeError("radial index m starts at 1".into()));
    }
    let v = params.v_number();
    let cutoffs = cutoffs_for_l(l, v);
    let idx = (m - 1) as usize;
    if idx >= cutoffs.len() || !(cutoffs[idx] < v) {
        return Err(Error::RangeError(format!(
            "LP({l},{m}) is not guided at V = {v:.4}"
        )));
    }
    let lo = cutoffs[idx];
    // upper end of the bracket: m-th zero of J_l, or V if that lies beyond
    let jl_zeros = bessel_j_zeros(l, v + 20.0);
    let hi = jl_zeros.get(idx).copied().unwrap_or(f64::INFINITY).min(v);

    let span = hi - lo;
    let a = lo + 1e-9 * span.max(1e-9);
    let b = hi - 1e-9 * span.max(1e-9);
    let fa = dispersion(l, v, a);
    let fb = dispersion(l, v, b);
    let (left, right) = if fa.is_finite() && fb.is_finite() && fa * fb < 0.0 {
        (a, b)
    } else {
        // endpoint evaluations can degenerate right at a Bessel zero or at
        // w = 0; walk inward until the sign change shows up
        let steps = 64;
        let mut bracket = None;
        let mut prev = a;
        let mut f_prev = fa;
        for i in 1..=steps {
            let x = (a + span * i as f64 / steps as f64).min(b);
            let fx = dispersion(l, v, x);
            if f_prev.is_finite() && fx.is_finite() && f_prev * fx < 0.0 {
                bracket = Some((prev, x));
                break;
            }
            prev = x;
            f_prev = fx;
        }
        bracket.ok_or_else(|| {
            Error::Numerical(format!(
                "dispersion root for LP({l},{m}) not bracketed in ({lo:.6}, {hi:.6})"
            ))
        })?
    };
    let u = bisect(|t| dispersion(l, v, t), left, right);
    let w = (v * v - u * u).max(0.0).sqrt();
    Ok(LpSolution { u, w })
}

/// Samples the LP(l, m) profile on the params grid, L2-normalized.
pub fn lp_profile(
    params: &FiberParams,
    l: u32,
    m: u32,
    orientation: Orientation,
) -> Result<Field2D> {
    if l == 0 && orientation == Orientation::Sin {
        return Err(Error::RangeError("LP(0,m) has no sine orientation".into()));
    }
    let sol = solve_lp(params, l, m)?;
    let a = params.core_radius;
    let grid = &params.grid;
    let j_at_u = bessel_j(l, sol.u);
    let k_at_w = bessel_k(l, sol.w)?;
    let mut field = Field2D::zeros(grid.nx(), grid.ny());
    for iy in 0..grid.ny() {
        let y = grid.y(iy);
        for ix in 0..grid.nx() {
            let x = grid.x(ix);
            let r = (x * x + y * y).sqrt();
            let radial = if r <= a {
                bessel_j(l, sol.u * r / a) / j_at_u
            } else {
                bessel_k(l, sol.w * r / a).unwrap_or(0.0) / k_at_w
            };
            let azimuthal = if l == 0 {
                1.0
            } else {
                let phi = y.atan2(x);
                match orientation {
                    Orientation::Cos => (l as f64 * phi).cos(),
                    Orientation::Sin => (l as f64 * phi).sin(),
                }
            };
            field.set(ix, iy, radial * azimuthal);
        }
    }
    let norm_sq: f64 = field.as_slice().iter().map(|v| v * v).sum::<f64>() * grid.pixel_area();
    if !(norm_sq > 0.0) {
        return Err(Error::Numerical(format!("LP({l},{m}) profile vanished on the grid")));
    }
    field.scale(1.0 / norm_sq.sqrt());
    Ok(field)
}

/// All guided LP profiles as a mode set with uniform weights.
///
/// Uniform weights because physical weights depend entirely on how light is
/// coupled into the fiber; callers comparing against a reconstruction attach
/// their own weights with [`ModeSet::with_weights`].
pub fn lp_modeset(params: &FiberParams) -> Result<ModeSet> {
    let cutoffs = lp_cutoffs(params)?;
    let mut profiles = Vec::new();
    for mode in &cutoffs {
        profiles.push(lp_profile(params, mode.l, mode.m, Orientation::Cos)?);
        if mode.l != 0 {
            profiles.push(lp_profile(params, mode.l, mode.m, Orientation::Sin)?);
        }
    }
    let count = profiles.len();
    let weights = vec![1.0 / count as f64; count];
    ModeSet::new(params.grid.clone(), weights, profiles, ModeNormalization::WeightsSumToOne)
}
