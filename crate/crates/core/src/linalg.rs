//! Dense symmetric linear algebra on flat-index matrices.
//!
//! Thin layer over `faer`: symmetric rank-k accumulation (the workhorse of
//! both covariance estimation and the down-conversion simulator), the full
//! self-adjoint eigensolver, and a seeded subspace iteration for the top-k
//! path used when only the leading modes are wanted.

use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn par() -> Par {
    Par::rayon(0)
}

/// Column-major mutable view over a flat `n x n` buffer.
pub(crate) fn mat_mut(data: &mut [f64], n: usize) -> MatMut<'_, f64> {
    MatMut::from_column_major_slice_mut(data, n, n)
}

/// Accumulates `acc += z * z^T` on the lower triangle only.
///
/// `acc` is an `n x n` column-major buffer; `z` is `n x c`. One call per
/// chunk of frames (or quadrature columns), chunks applied in fixed order,
/// keeps the result independent of thread scheduling.
pub(crate) fn accumulate_gram_lower(acc: &mut [f64], n: usize, z: MatRef<'_, f64>) {
    debug_assert_eq!(acc.len(), n * n);
    debug_assert_eq!(z.nrows(), n);
    triangular::matmul(
        mat_mut(acc, n),
        BlockStructure::TriangularLower,
        Accum::Add,
        z,
        BlockStructure::Rectangular,
        z.transpose(),
        BlockStructure::Rectangular,
        1.0,
        par(),
    );
}

/// Mirrors the triangle filled by [`accumulate_gram_lower`] onto the other
/// one, making the buffer exactly symmetric. The column-major lower triangle
/// lives at `data[j*n + i]` for `i >= j`; this copies it to `data[i*n + j]`.
pub(crate) fn mirror_lower(data: &mut [f64], n: usize) {
    for j in 0..n {
        for i in j + 1..n {
            data[i * n + j] = data[j * n + i];
        }
    }
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in descending order with matching eigenvector columns.
pub(crate) fn sym_eigen_descending(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("self-adjoint eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    // faer returns nondecreasing order; flip.
    let values: Vec<f64> = (0..n).rev().map(|i| s[i]).collect();
    let mut vectors = Mat::<f64>::zeros(n, n);
    for (dst, src) in (0..n).rev().enumerate() {
        vectors.col_mut(dst).copy_from(u.col(src));
    }
    Ok((values, vectors))
}

/// Leading `k` eigenpairs of a symmetric PSD matrix by blocked subspace
/// iteration with QR re-orthonormalization and Rayleigh-Ritz extraction.
///
/// Deterministic for a given `seed`. Intended for matrices whose spectrum
/// decays fast (mode weights do), where a small subspace converges in a few
/// sweeps; `k` plus a margin of columns is iterated and the best `k` kept.
pub(crate) fn sym_eigen_top_k(
    a: MatRef<'_, f64>,
    k: usize,
    seed: u64,
) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    if k == 0 || k > n {
        return Err(Error::RangeError(format!("top-k count {k} outside 1..={n}")));
    }
    if k == n {
        return sym_eigen_descending(a);
    }
    let margin = (k / 2).clamp(16, 64).min(n - k);
    let b = k + margin;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Mat::<f64>::from_fn(n, b, |_, _| rng.random::<f64>() - 0.5);
    let mut av = Mat::<f64>::zeros(n, b);
    let mut prev_ritz: Option<Vec<f64>> = None;

    const MAX_SWEEPS: usize = 80;
    const RTOL: f64 = 1e-11;
    for _ in 0..MAX_SWEEPS {
        matmul(av.as_mut(), Accum::Replace, a, v.as_ref(), 1.0, par());
        let qr = av.qr();
        v = qr.compute_thin_Q();

        // Rayleigh-Ritz on the current subspace.
        matmul(av.as_mut(), Accum::Replace, a, v.as_ref(), 1.0, par());
        let mut small = Mat::<f64>::zeros(b, b);
        matmul(small.as_mut(), Accum::Replace, v.transpose(), av.as_ref(), 1.0, par());
        // symmetrize the projection before the small eigensolve
        let small_sym = Mat::<f64>::from_fn(b, b, |i, j| 0.5 * (small[(i, j)] + small[(j, i)]));
        let evd = small_sym
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("subspace eigensolve failed: {e:?}")))?;
        let ritz: Vec<f64> = (0..b).rev().map(|i| evd.S()[i]).collect();

        let converged = prev_ritz.as_ref().is_some_and(|prev| {
            let scale = ritz[0].abs().max(f64::MIN_POSITIVE);
            prev.iter().zip(&ritz).take(k).all(|(p, r)| (p - r).abs() <= RTOL * scale)
        });
        if converged {
            // Rotate the basis onto the Ritz vectors, descending.
            let mut rot = Mat::<f64>::zeros(b, b);
            for (dst, src) in (0..b).rev().enumerate() {
                rot.col_mut(dst).copy_from(evd.U().col(src));
            }
            let mut ritz_vectors = Mat::<f64>::zeros(n, b);
            matmul(ritz_vectors.as_mut(), Accum::Replace, v.as_ref(), rot.as_ref(), 1.0, par());
            let mut out = Mat::<f64>::zeros(n, k);
            for j in 0..k {
                out.col_mut(j).copy_from(ritz_vectors.col(j));
            }
            return Ok((ritz[..k].to_vec(), out));
        }
        prev_ritz = Some(ritz);
    }
    Err(Error::Numerical(format!(
        "subspace iteration did not converge in {MAX_SWEEPS} sweeps (k = {k})"
    )))
}
