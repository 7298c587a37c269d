//! Coherent-mode decomposition of a flattened |G1| matrix.
//!
//! The discrete eigenproblem carries the pixel-area measure: an eigenvalue
//! `e` of the matrix corresponds to the integral-equation weight
//! `lambda = e * dx * dy`, and a unit-Euclidean-norm eigenvector `v` folds to
//! the profile `u = v / sqrt(dx * dy)` so that `sum u^2 dx dy = 1`.

use crate::cov::{CovKind, FlatCovariance};
use crate::error::{Error, Result};
use crate::grid::{fold_vector, Field2D, PixelGrid};
use crate::linalg;
use crate::stats::MeanIntensity;

/// How the weights/profiles of a [`ModeSet`] are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeNormalization {
    /// Profiles have unit discrete L2 norm; weights carry the intensity.
    UnitL2Modes,
    /// Weights rescaled to sum to one (profiles still unit L2).
    WeightsSumToOne,
}

/// Ordered list of (weight, 2D profile) pairs on one grid.
#[derive(Debug, Clone)]
pub struct ModeSet {
    grid: PixelGrid,
    weights: Vec<f64>,
    profiles: Vec<Field2D>,
    normalization: ModeNormalization,
}

/// Fraction of the first weight below which a negative eigenvalue is treated
/// as numerical noise and clamped.
const EIGENVALUE_CLAMP_REL: f64 = 1e-9;

/// Orthogonality tolerance for eigendecomposition-produced profiles.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

impl ModeSet {
    /// Validates shapes, non-negative descending weights, and finiteness.
    ///
    /// Orthogonality is a property of how the set was produced (exact to
    /// machine precision for eigendecompositions, grid-discretization-limited
    /// for analytically sampled mode families); check it explicitly with
    /// [`ModeSet::max_cross_overlap`] where it matters.
    pub fn new(
        grid: PixelGrid,
        weights: Vec<f64>,
        profiles: Vec<Field2D>,
        normalization: ModeNormalization,
    ) -> Result<Self> {
        if weights.len() != profiles.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} profiles", weights.len()),
                got: format!("{}", profiles.len()),
            });
        }
        if weights.is_empty() {
            return Err(Error::InvalidParameter("mode set cannot be empty".into()));
        }
        for (m, w) in weights.iter().enumerate() {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidParameter(format!("weight {m} is {w}")));
            }
        }
        if weights.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("weights must be sorted descending".into()));
        }
        for (m, p) in profiles.iter().enumerate() {
            p.ensure_matches(&grid, &format!("mode {m}"))?;
            if p.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("mode {m} profile")));
            }
        }
        Ok(Self { grid, weights, profiles, normalization })
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn profile(&self, m: usize) -> &Field2D {
        &self.profiles[m]
    }

    pub fn profiles(&self) -> &[Field2D] {
        &self.profiles
    }

    pub fn normalization(&self) -> ModeNormalization {
        self.normalization
    }

    /// Keeps only the first `count` modes.
    pub fn truncated(&self, count: usize) -> Result<ModeSet> {
        if count == 0 || count > self.len() {
            return Err(Error::RangeError(format!(
                "truncation count {count} outside 1..={}",
                self.len()
            )));
        }
        Ok(ModeSet {
            grid: self.grid.clone(),
            weights: self.weights[..count].to_vec(),
            profiles: self.profiles[..count].to_vec(),
            normalization: self.normalization,
        })
    }

    /// Same profiles with replaced weights (sorted check applies).
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<ModeSet> {
        ModeSet::new(self.grid.clone(), weights, self.profiles.clone(), self.normalization)
    }

    /// Weights rescaled to sum to one over the first `truncate` modes
    /// (all modes if `None`).
    pub fn weights_normalized(&self, truncate: Option<usize>) -> Result<Vec<f64>> {
        let k = truncate.unwrap_or(self.len()).min(self.len());
        let total: f64 = self.weights[..k].iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateWeights);
        }
        Ok(self.weights[..k].iter().map(|w| w / total).collect())
    }

    /// Largest |overlap| between distinct profiles; zero for an exactly
    /// orthogonal set.
    pub fn max_cross_overlap(&self) -> f64 {
        let mut max = 0.0f64;
        for a in 0..self.len() {
            for b in 0..a {
                let f = overlap_unchecked(&self.grid, &self.profiles[a], &self.profiles[b]);
                max = max.max(f.abs());
            }
        }
        max
    }
}

/// Outcome of [`decompose`]: the mode set plus eigen-spectrum diagnostics.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub modes: ModeSet,
    /// Sum of clamped negative eigenvalues relative to the matrix trace.
    pub clamped_mass_fraction: f64,
    pub clamped_count: usize,
}

/// Full dense eigendecomposition of a |G1| matrix into coherent modes.
///
/// Weights come out descending, tiny negative eigenvalues (numerics) are
/// clamped to zero, and each profile's global sign is fixed by making its
/// largest-magnitude entry positive. A warning is logged when the clamped
/// mass exceeds 0.1% of the trace.
pub fn decompose(g1: &FlatCovariance) -> Result<Decomposition> {
    decompose_impl(g1, None, 0)
}

/// Iterative top-`k` variant for large grids where only the leading modes
/// carry weight. `seed` fixes the start subspace, keeping output
/// reproducible.
pub fn decompose_top_k(g1: &FlatCovariance, k: usize, seed: u64) -> Result<Decomposition> {
    decompose_impl(g1, Some(k), seed)
}

fn decompose_impl(g1: &FlatCovariance, top_k: Option<usize>, seed: u64) -> Result<Decomposition> {
    if g1.kind() != CovKind::AbsG1 {
        return Err(Error::InvalidParameter("decompose expects a |G1| matrix".into()));
    }
    if g1.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("|G1| matrix".into()));
    }
    g1.validate_symmetry(crate::cov::SYMMETRY_RTOL)?;
    if g1.as_slice().iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroCovariance);
    }

    let grid = g1.grid().clone();
    let area = grid.pixel_area();
    let (eigenvalues, vectors) = match top_k {
        None => linalg::sym_eigen_descending(g1.as_mat_ref())?,
        Some(k) => linalg::sym_eigen_top_k(g1.as_mat_ref(), k, seed)?,
    };

    let clamp_floor = -EIGENVALUE_CLAMP_REL * eigenvalues[0].max(0.0);
    let mut clamped_count = 0usize;
    let mut clamped_mass = 0.0f64;
    let mut deep_negative = 0usize;
    let n = grid.len();
    let count = eigenvalues.len();
    let mut weights = Vec::with_capacity(count);
    let mut profiles = Vec::with_capacity(count);
    let inv_sqrt_area = 1.0 / area.sqrt();
    for m in 0..count {
        let e = eigenvalues[m];
        let w = if e < 0.0 {
            clamped_count += 1;
            clamped_mass += -e;
            if e < clamp_floor {
                deep_negative += 1;
            }
            0.0
        } else {
            e * area
        };
        weights.push(w);

        let col = vectors.col(m);
        let mut v: Vec<f64> = (0..n).map(|i| col[i] * inv_sqrt_area).collect();
        // sign convention: largest-|entry| positive
        let mut max_abs = 0.0f64;
        let mut max_val = 0.0f64;
        for &x in &v {
            if x.abs() > max_abs {
                max_abs = x.abs();
                max_val = x;
            }
        }
        if max_val < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        profiles.push(fold_vector(&grid, &v)?);
    }

    // weights may lose strict ordering where negatives were clamped at the
    // tail; enforce the invariant
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap());
    let weights: Vec<f64> = order.iter().map(|&i| weights[i]).collect();
    let profiles: Vec<Field2D> = order.iter().map(|&i| profiles[i].clone()).collect();

    let trace = g1.trace();
    let clamped_mass_fraction = if trace > 0.0 { clamped_mass / trace } else { 0.0 };
    if clamped_mass_fraction > 1e-3 {
        log::warn!(
            "clamped {deep_negative} eigenvalues well below zero ({clamped_count} total, \
             {clamped_mass_fraction:.2e} of the trace); the input is far from positive \
             semidefinite, often a sign of an aggressive threshold filter"
        );
    }

    let modes = ModeSet::new(grid, weights, profiles, ModeNormalization::UnitL2Modes)?;
    Ok(Decomposition { modes, clamped_mass_fraction, clamped_count })
}

/// Effective number of coherent modes, `K = (sum w)^2 / sum w^2`, over the
/// first `truncate` modes (all if `None`).
pub fn schmidt_number(modes: &ModeSet, truncate: Option<usize>) -> Result<f64> {
    let k = truncate.unwrap_or(modes.len()).min(modes.len());
    if k == 0 {
        return Err(Error::DegenerateWeights);
    }
    let sum: f64 = modes.weights[..k].iter().sum();
    let sum_sq: f64 = modes.weights[..k].iter().map(|w| w * w).sum();
    if !(sum_sq > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    Ok(sum * sum / sum_sq)
}

/// Mean intensity from the first `n_modes` modes: `sum_m w_m |u_m|^2`.
pub fn reconstruct_intensity(modes: &ModeSet, n_modes: usize) -> Result<MeanIntensity> {
    if n_modes == 0 || n_modes > modes.len() {
        return Err(Error::RangeError(format!(
            "mode count {n_modes} outside 1..={}",
            modes.len()
        )));
    }
    let grid = modes.grid().clone();
    let mut acc = vec![0.0f64; grid.len()];
    for m in 0..n_modes {
        let w = modes.weights[m];
        for (a, &u) in acc.iter_mut().zip(modes.profiles[m].as_slice()) {
            *a += w * u * u;
        }
    }
    let values = Field2D::from_vec(grid.nx(), grid.ny(), acc)?;
    MeanIntensity::new(grid, values)
}

fn overlap_unchecked(grid: &PixelGrid, a: &Field2D, b: &Field2D) -> f64 {
    let area = grid.pixel_area();
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum::<f64>() * area
}

/// Signed discrete overlap `sum a b dx dy` of two L2-normalized profiles.
pub fn overlap(grid: &PixelGrid, a: &Field2D, b: &Field2D) -> Result<f64> {
    a.ensure_matches(grid, "overlap lhs")?;
    b.ensure_matches(grid, "overlap rhs")?;
    Ok(overlap_unchecked(grid, a, b))
}

/// Fidelity between two L2-normalized profiles: |overlap|, absorbing the
/// eigenvector sign ambiguity.
pub fn fidelity(grid: &PixelGrid, a: &Field2D, b: &Field2D) -> Result<f64> {
    Ok(overlap(grid, a, b)?.abs())
}

/// One matched pair from [`match_modes`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMatch {
    pub index_a: usize,
    pub index_b: usize,
    pub fidelity: f64,
}

/// Greedy maximum-fidelity assignment between the first `count` modes of two
/// sets; each index used once. Tolerates order swaps between nearly
/// degenerate modes, which pairing by weight rank alone would misalign.
pub fn match_modes(a: &ModeSet, b: &ModeSet, count: usize) -> Result<Vec<ModeMatch>> {
    a.grid().ensure_same(b.grid(), "mode matching")?;
    if count == 0 || count > a.len() || count > b.len() {
        return Err(Error::RangeError(format!(
            "match count {count} exceeds a set ({} and {} modes)",
            a.len(),
            b.len()
        )));
    }
    let mut table = vec![0.0f64; count * count];
    for ia in 0..count {
        for ib in 0..count {
            table[ia * count + ib] =
                overlap_unchecked(a.grid(), a.profile(ia), b.profile(ib)).abs();
        }
    }
    let mut used_a = vec![false; count];
    let mut used_b = vec![false; count];
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best = (0usize, 0usize, -1.0f64);
        for ia in 0..count {
            if used_a[ia] {
                continue;
            }
            for ib in 0..count {
                if used_b[ib] {
                    continue;
                }
                let f = table[ia * count + ib];
                if f > best.2 {
                    best = (ia, ib, f);
                }
            }
        }
        used_a[best.0] = true;
        used_b[best.1] = true;
        pairs.push(ModeMatch { index_a: best.0, index_b: best.1, fidelity: best.2 });
    }
    pairs.sort_by_key(|p| p.index_a);
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisUnit;

    fn grid(nx: usize, ny: usize) -> PixelGrid {
        PixelGrid::centered(nx, ny, 0.5, 0.5, AxisUnit::Meters).unwrap()
    }

    /// Normalized profile from raw values.
    fn unit_profile(grid: &PixelGrid, raw: &[f64]) -> Field2D {
        let norm: f64 =
            (raw.iter().map(|v| v * v).sum::<f64>() * grid.pixel_area()).sqrt();
        Field2D::from_vec(grid.nx(), grid.ny(), raw.iter().map(|v| v / norm).collect()).unwrap()
    }

    fn rank_one_g1(grid: &PixelGrid, weight: f64, u: &Field2D) -> FlatCovariance {
        let n = grid.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = weight * u.as_slice()[i] * u.as_slice()[j];
            }
        }
        FlatCovariance::new(grid.clone(), CovKind::AbsG1, data).unwrap()
    }

    #[test]
    fn rank_one_decomposition_recovers_weight_and_profile() {
        let g = grid(4, 3);
        let raw: Vec<f64> = (0..12).map(|i| ((i as f64) * 0.7).sin() + 1.5).collect();
        let u = unit_profile(&g, &raw);
        let g1 = rank_one_g1(&g, 2.25, &u);
        let dec = decompose(&g1).unwrap();
        assert!((dec.modes.weights()[0] - 2.25).abs() < 1e-10);
        assert!(dec.modes.weights()[1..].iter().all(|&w| w < 1e-10));
        let f = fidelity(&g, dec.modes.profile(0), &u).unwrap();
        assert!((f - 1.0).abs() < 1e-10);
        // unit L2 norm under the discrete measure
        let norm: f64 = dec.modes.profile(0).as_slice().iter().map(|v| v * v).sum::<f64>()
            * g.pixel_area();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn decompose_validates_input() {
        let g = grid(2, 1);
        let asym = FlatCovariance::from_symmetric_parts(
            g.clone(),
            CovKind::AbsG1,
            vec![1.0, 0.6, 0.2, 1.0],
        );
        assert!(matches!(decompose(&asym), Err(Error::Asymmetric { .. })));

        let cov_kind =
            FlatCovariance::new(g.clone(), CovKind::Covariance, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(decompose(&cov_kind).is_err());

        let zero = FlatCovariance::new(g, CovKind::AbsG1, vec![0.0; 4]).unwrap();
        assert!(matches!(decompose(&zero), Err(Error::ZeroCovariance)));
    }

    #[test]
    fn reassembly_reproduces_random_psd_matrix() {
        // random symmetric PSD built from a few rank-one terms
        let g = grid(3, 3);
        let n = g.len();
        let mut data = vec![0.0f64; n * n];
        let mut state = 77u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (u32::MAX as f64)
        };
        for r in 0..5 {
            let v: Vec<f64> = (0..n).map(|_| next() - 0.3).collect();
            let w = 2.0 / (r + 1) as f64;
            for i in 0..n {
                for j in 0..n {
                    data[i * n + j] += w * v[i] * v[j];
                }
            }
        }
        // make entries non-negative by adding a strong constant mode
        for v in data.iter_mut() {
            *v += 5.0;
        }
        let g1 = FlatCovariance::new(g.clone(), CovKind::AbsG1, data.clone()).unwrap();
        let dec = decompose(&g1).unwrap();
        let modes = &dec.modes;
        let area = g.pixel_area();
        let mut recon = vec![0.0f64; n * n];
        for m in 0..modes.len() {
            let w = modes.weights()[m];
            let u = modes.profile(m).as_slice();
            for i in 0..n {
                for j in 0..n {
                    recon[i * n + j] += w * u[i] * u[j];
                }
            }
        }
        let _ = area;
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (r, d) in recon.iter().zip(&data) {
            assert!((r - d).abs() <= 1e-8 * scale, "{r} vs {d}");
        }
        // orthonormal profiles from an eigendecomposition
        assert!(modes.max_cross_overlap() <= ORTHOGONALITY_TOL);
    }

    #[test]
    fn schmidt_number_examples() {
        let g = grid(2, 1);
        let u0 = unit_profile(&g, &[1.0, 0.0]);
        let u1 = unit_profile(&g, &[0.0, 1.0]);
        let single = ModeSet::new(
            g.clone(),
            vec![1.0, 0.0],
            vec![u0.clone(), u1.clone()],
            ModeNormalization::UnitL2Modes,
        )
        .unwrap();
        assert!((schmidt_number(&single, None).unwrap() - 1.0).abs() < 1e-14);

        let two = ModeSet::new(
            g.clone(),
            vec![0.5, 0.5],
            vec![u0.clone(), u1.clone()],
            ModeNormalization::UnitL2Modes,
        )
        .unwrap();
        assert!((schmidt_number(&two, None).unwrap() - 2.0).abs() < 1e-14);

        // invariance under global rescale
        let scaled = two.with_weights(vec![5.0, 5.0]).unwrap();
        assert!((schmidt_number(&scaled, None).unwrap() - 2.0).abs() < 1e-14);

        let zero = ModeSet::new(
            g,
            vec![0.0, 0.0],
            vec![u0, u1],
            ModeNormalization::UnitL2Modes,
        )
        .unwrap();
        assert!(matches!(schmidt_number(&zero, None), Err(Error::DegenerateWeights)));
    }

    #[test]
    fn schmidt_number_respects_truncation_and_bounds() {
        let g = grid(2, 1);
        let u0 = unit_profile(&g, &[1.0, 0.0]);
        let u1 = unit_profile(&g, &[0.0, 1.0]);
        let set = ModeSet::new(
            g,
            vec![1.0, 1.0],
            vec![u0, u1],
            ModeNormalization::UnitL2Modes,
        )
        .unwrap();
        assert!((schmidt_number(&set, Some(1)).unwrap() - 1.0).abs() < 1e-14);
        assert!((schmidt_number(&set, Some(2)).unwrap() - 2.0).abs() < 1e-14);

        // 1 <= K <= number of nonzero weights for arbitrary spectra
        for weights in [vec![3.0, 1.0], vec![5.0, 0.0], vec![2.0, 2.0]] {
            let nonzero = weights.iter().filter(|&&w| w > 0.0).count() as f64;
            let s = set.with_weights(weights).unwrap();
            let k = schmidt_number(&s, None).unwrap();
            assert!((1.0..=nonzero + 1e-12).contains(&k), "K = {k}");
        }
    }

    #[test]
    fn single_mode_reconstruction_is_weighted_square() {
        let g = grid(3, 2);
        let u = unit_profile(&g, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let set =
            ModeSet::new(g.clone(), vec![3.0], vec![u.clone()], ModeNormalization::UnitL2Modes)
                .unwrap();
        let mean = reconstruct_intensity(&set, 1).unwrap();
        for n in 0..g.len() {
            let want = 3.0 * u.as_slice()[n] * u.as_slice()[n];
            assert!((mean.at_flat(n) - want).abs() < 1e-12);
        }
        assert!(reconstruct_intensity(&set, 2).is_err());
        assert!(reconstruct_intensity(&set, 0).is_err());
    }

    #[test]
    fn full_rank_reconstruction_equals_folded_diagonal() {
        let g = grid(3, 3);
        let n = g.len();
        // symmetric non-negative matrix with positive diagonal
        let mut data = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = 1.0 / (1.0 + (i as f64 - j as f64).abs());
            }
        }
        let g1 = FlatCovariance::new(g.clone(), CovKind::AbsG1, data).unwrap();
        let dec = decompose(&g1).unwrap();
        let mean = reconstruct_intensity(&dec.modes, dec.modes.len()).unwrap();
        for i in 0..n {
            let want = g1.get(i, i);
            assert!(
                (mean.at_flat(i) - want).abs() <= 1e-8 * want.abs().max(1e-300),
                "diag {i}"
            );
        }
    }

    #[test]
    fn fidelity_properties() {
        let g = grid(3, 2);
        let a = unit_profile(&g, &[1.0, 0.5, -0.25, 0.1, 0.0, 2.0]);
        let b = unit_profile(&g, &[0.3, -1.0, 0.6, 0.9, 1.1, -0.2]);
        assert!((fidelity(&g, &a, &a).unwrap() - 1.0).abs() < 1e-12);
        let fab = fidelity(&g, &a, &b).unwrap();
        let fba = fidelity(&g, &b, &a).unwrap();
        assert!((fab - fba).abs() < 1e-14);
        assert!(fab <= 1.0 + 1e-12);
        // sign flip is absorbed
        let mut neg = b.clone();
        neg.scale(-1.0);
        assert!((fidelity(&g, &a, &neg).unwrap() - fab).abs() < 1e-14);
    }

    #[test]
    fn match_modes_identity_and_swap() {
        let g = grid(2, 2);
        let profiles: Vec<Field2D> = (0..4)
            .map(|m| {
                let mut raw = vec![0.0; 4];
                raw[m] = 1.0;
                unit_profile(&g, &raw)
            })
            .collect();
        let weights = vec![4.0, 3.0, 2.0, 1.0];
        let a = ModeSet::new(
            g.clone(),
            weights.clone(),
            profiles.clone(),
            ModeNormalization::UnitL2Modes,
        )
        .unwrap();

        let pairs = match_modes(&a, &a, 4).unwrap();
        for (m, p) in pairs.iter().enumerate() {
            assert_eq!(p.index_a, m);
            assert_eq!(p.index_b, m);
            assert!((p.fidelity - 1.0).abs() < 1e-12);
        }

        // b has modes 1 and 2 swapped; matching must cross over
        let swapped: Vec<Field2D> =
            vec![profiles[0].clone(), profiles[2].clone(), profiles[1].clone(), profiles[3].clone()];
        let b = ModeSet::new(g, weights, swapped, ModeNormalization::UnitL2Modes).unwrap();
        let pairs = match_modes(&a, &b, 3).unwrap();
        assert_eq!(pairs[1].index_a, 1);
        assert_eq!(pairs[1].index_b, 2);
        assert_eq!(pairs[2].index_a, 2);
        assert_eq!(pairs[2].index_b, 1);
        assert!(pairs.iter().all(|p| p.fidelity > 1.0 - 1e-12));

        assert!(match_modes(&a, &b, 5).is_err());
    }
}
