//! Flat key-value parameter files for the simulators.
//!
//! Syntax: one `key = value` pair per line, `#` comments, blank lines
//! ignored. Unknown keys are errors (typos should not silently fall back to
//! defaults). All quantities are SI: meters, radians, 1/m.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fiber::FiberParams;
use crate::grid::{AxisUnit, PixelGrid};
use crate::pdc::{PdcParams, RhoQuadrature};

/// Parses the `key = value` lines of a parameter file.
pub fn parse_key_values(text: &str, context: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                context: context.into(),
                reason: format!("line {}: expected `key = value`, got {raw:?}", line_no + 1),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(Error::Parse {
                context: context.into(),
                reason: format!("line {}: empty value for {key:?}", line_no + 1),
            });
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Parse {
                context: context.into(),
                reason: format!("line {}: duplicate key {key:?}", line_no + 1),
            });
        }
    }
    Ok(map)
}

struct Extractor {
    context: String,
    map: BTreeMap<String, String>,
}

impl Extractor {
    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(text) => text.parse().map(Some).map_err(|_| Error::Parse {
                context: self.context.clone(),
                reason: format!("{key}: not a number: {text:?}"),
            }),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(text) => text.parse().map(Some).map_err(|_| Error::Parse {
                context: self.context.clone(),
                reason: format!("{key}: not a positive integer: {text:?}"),
            }),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.map.keys().next() {
            return Err(Error::Parse {
                context: self.context,
                reason: format!("unknown key {key:?}"),
            });
        }
        Ok(())
    }
}

/// Down-conversion simulator parameters as read from a file; every key is
/// optional and falls back to the built-in experiment-fit defaults.
///
/// Keys: `gain`, `pump_fwhm_x`, `ellipticity`, `mismatch`, `crystal_length`,
/// `lambda_pump`, `n_pump`, `n_signal`, `grid_nx`, `grid_ny`, `theta_max`,
/// `rho_extent_wp`, `rho_nodes`, `max_matrix_bytes`.
pub struct PdcFileParams;

impl PdcFileParams {
    pub fn parse(text: &str, context: &str) -> Result<PdcParams> {
        let mut ex =
            Extractor { context: context.into(), map: parse_key_values(text, context)? };
        let defaults = PdcParams::default();
        let grid_nx = ex.take_usize("grid_nx")?.unwrap_or(defaults.q_grid.nx());
        let grid_ny = ex.take_usize("grid_ny")?.unwrap_or(defaults.q_grid.ny());
        let default_theta = defaults.q_grid.nx() as f64 * defaults.q_grid.dx() / 2.0;
        let theta_max = ex.take_f64("theta_max")?.unwrap_or(default_theta);
        let q_grid = PixelGrid::centered_span(grid_nx, grid_ny, theta_max, AxisUnit::Radians)?;
        let params = PdcParams {
            gain: ex.take_f64("gain")?.unwrap_or(defaults.gain),
            pump_fwhm_x: ex.take_f64("pump_fwhm_x")?.unwrap_or(defaults.pump_fwhm_x),
            ellipticity: ex.take_f64("ellipticity")?.unwrap_or(defaults.ellipticity),
            mismatch: ex.take_f64("mismatch")?.unwrap_or(defaults.mismatch),
            crystal_length: ex.take_f64("crystal_length")?.unwrap_or(defaults.crystal_length),
            lambda_pump: ex.take_f64("lambda_pump")?.unwrap_or(defaults.lambda_pump),
            n_pump: ex.take_f64("n_pump")?.unwrap_or(defaults.n_pump),
            n_signal: ex.take_f64("n_signal")?.unwrap_or(defaults.n_signal),
            q_grid,
            rho_quadrature: RhoQuadrature {
                extent_wp: ex
                    .take_f64("rho_extent_wp")?
                    .unwrap_or(defaults.rho_quadrature.extent_wp),
                nodes_per_axis: ex
                    .take_usize("rho_nodes")?
                    .unwrap_or(defaults.rho_quadrature.nodes_per_axis),
            },
            max_matrix_bytes: ex
                .take_f64("max_matrix_bytes")?
                .map(|v| v as u64)
                .unwrap_or(defaults.max_matrix_bytes),
        };
        ex.finish()?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<PdcParams> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// Fiber simulator parameters.
///
/// Keys: `core_radius`, `wavelength`, either `na` or both `n_core` and
/// `n_clad`, `grid_n`, and one of `grid_half_extent` (meters) or
/// `grid_extent_radii` (multiples of the core radius; default 3).
pub struct FiberFileParams;

impl FiberFileParams {
    pub fn parse(text: &str, context: &str) -> Result<FiberParams> {
        let mut ex =
            Extractor { context: context.into(), map: parse_key_values(text, context)? };
        let missing = |key: &str| Error::Parse {
            context: context.into(),
            reason: format!("missing required key {key:?}"),
        };
        let core_radius = ex.take_f64("core_radius")?.ok_or_else(|| missing("core_radius"))?;
        let wavelength = ex.take_f64("wavelength")?.ok_or_else(|| missing("wavelength"))?;
        let na = ex.take_f64("na")?;
        let n_core = ex.take_f64("n_core")?;
        let n_clad = ex.take_f64("n_clad")?;
        let grid_n = ex.take_usize("grid_n")?.unwrap_or(64);
        let half_extent = match (ex.take_f64("grid_half_extent")?, ex.take_f64("grid_extent_radii")?)
        {
            (Some(m), None) => m,
            (None, Some(r)) => r * core_radius,
            (None, None) => 3.0 * core_radius,
            (Some(_), Some(_)) => {
                return Err(Error::Parse {
                    context: context.into(),
                    reason: "give grid_half_extent or grid_extent_radii, not both".into(),
                })
            }
        };
        ex.finish()?;
        let grid = PixelGrid::centered_span(grid_n, grid_n, half_extent, AxisUnit::Meters)?;
        let params = match (na, n_core, n_clad) {
            (Some(na), None, None) => {
                FiberParams { core_radius, numerical_aperture: na, wavelength, grid }
            }
            (None, Some(nc), Some(ncl)) => {
                FiberParams::from_indices(core_radius, nc, ncl, wavelength, grid)?
            }
            _ => {
                return Err(Error::Parse {
                    context: context.into(),
                    reason: "give `na`, or both `n_core` and `n_clad`".into(),
                })
            }
        };
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<FiberParams> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_values() {
        let map = parse_key_values("# header\n a = 1.5 # inline\n\n b=two\n", "test").unwrap();
        assert_eq!(map.get("a").unwrap(), "1.5");
        assert_eq!(map.get("b").unwrap(), "two");
        assert!(parse_key_values("a 1\n", "test").is_err());
        assert!(parse_key_values("a = 1\na = 2\n", "test").is_err());
    }

    #[test]
    fn pdc_defaults_and_overrides() {
        let p = PdcFileParams::parse("", "test").unwrap();
        assert_eq!(p.gain, 3.8);
        assert_eq!(p.q_grid.nx(), 64);

        let p = PdcFileParams::parse(
            "gain = 2.0\ngrid_nx = 16\ngrid_ny = 16\ntheta_max = 10e-3\nrho_nodes = 64\n",
            "test",
        )
        .unwrap();
        assert_eq!(p.gain, 2.0);
        assert_eq!(p.q_grid.nx(), 16);
        assert!((p.q_grid.x(0) + (10e-3 - p.q_grid.dx() / 2.0)).abs() < 1e-12);

        assert!(PdcFileParams::parse("not_a_key = 1\n", "test").is_err());
        assert!(PdcFileParams::parse("gain = -1\n", "test").is_err());
    }

    #[test]
    fn fiber_requires_na_or_index_pair() {
        let text = "core_radius = 4.1e-6\nwavelength = 532e-9\nna = 0.14\ngrid_n = 32\n";
        let p = FiberFileParams::parse(text, "test").unwrap();
        assert!((p.v_number() - 6.78).abs() < 0.01);
        assert_eq!(p.grid.nx(), 32);

        let text = "core_radius = 4.1e-6\nwavelength = 532e-9\nn_core = 1.4630\nn_clad = 1.4563\n";
        let p = FiberFileParams::parse(text, "test").unwrap();
        assert!((p.numerical_aperture - 0.1398).abs() < 2e-3);

        assert!(FiberFileParams::parse("core_radius = 4e-6\nwavelength = 5e-7\n", "test").is_err());
    }
}
