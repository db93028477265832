//! Thin SVD, QR and leading singular subspaces.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;

/// Relative threshold below which `σ_r` counts as zero.
pub const RANK_TOL: f64 = 1e-12;

/// Relative spectral gap below which a warning is logged.
pub const GAP_WARN: f64 = 1e-8;

/// Above this many entries a wide matrix is handled through its Gram matrix.
const GRAM_ROUTE_MIN_LEN: usize = 250_000;

/// Relative eigenvalue gap under which the Gram route hands over to a full SVD.
const GRAM_GAP_MIN: f64 = 1e-6;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice())
}

/// `m / 2^e` with `2^e ≤ max|m_ij| < 2^{e+1}`, and the scale `2^e`. Squared
/// norms then cannot underflow or overflow, and the division is exact.
fn to_na_scaled(m: &Matrix) -> (DMatrix<f64>, f64) {
    let max = m.max_abs();
    let mut na = to_na(m);
    if max > 0.0 && max.is_finite() {
        let scale = 2f64.powi((max.log2().floor() as i32).clamp(f64::MIN_EXP - 1, f64::MAX_EXP - 1));
        na.unscale_mut(scale);
        (na, scale)
    } else {
        (na, 1.0)
    }
}

/// nalgebra's iterative decompositions may not terminate on inf or NaN.
fn check_finite(m: &Matrix) -> Result<()> {
    if m.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(invalid(format!("non-finite entry in a {}x{} matrix", m.rows(), m.cols())));
    }
    Ok(())
}

fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_col_major(m.nrows(), m.ncols(), m.as_slice().to_vec()).expect("sizes agree")
}

/// Flips each column so its first entry above a small threshold is positive.
pub fn fix_signs(m: &mut Matrix) {
    for j in 0..m.cols() {
        let col = m.column_mut(j);
        let scale = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let lead = col.iter().copied().find(|v| v.abs() > 1e-10 * scale.max(f64::MIN_POSITIVE));
        if lead.is_some_and(|v| v < 0.0) {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Singular values in descending order; all NaN when `m` has a non-finite entry.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    if check_finite(m).is_err() {
        return vec![f64::NAN; m.rows().min(m.cols())];
    }
    let (_, mut s) = left_svd(m);
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Residual tolerance, relative to `‖m‖_F`, for accepting a computed SVD.
const SVD_RESIDUAL_TOL: f64 = 1e-9;

fn svd_residual(m: &DMatrix<f64>, u: &DMatrix<f64>, s: &[f64], vt: &DMatrix<f64>) -> f64 {
    let mut us = u.clone();
    for (j, &sj) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(sj);
    }
    (m - us * vt).norm()
}

/// Left singular vectors and singular values of `m`, unsorted.
///
/// nalgebra's bidiagonal SVD occasionally returns an inconsistent factorization
/// on rank-deficient input. Each result is checked against `m`; on failure the
/// transpose is tried, then the eigendecomposition of `m mᵀ`.
fn left_svd(m: &Matrix) -> (DMatrix<f64>, Vec<f64>) {
    let (na, scale) = to_na_scaled(m);
    let (u, mut s) = left_svd_unit(&na, m.rows(), m.cols());
    s.iter_mut().for_each(|v| *v *= scale);
    (u, s)
}

fn left_svd_unit(na: &DMatrix<f64>, rows: usize, cols: usize) -> (DMatrix<f64>, Vec<f64>) {
    let tol = SVD_RESIDUAL_TOL * na.norm().max(f64::MIN_POSITIVE);
    let svd = na.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    if svd_residual(na, &u, &s, &vt) <= tol {
        return (u, s);
    }
    let t = na.transpose();
    let svd = t.clone().svd(true, true);
    let (ut, vtt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    if svd_residual(&t, &ut, &s, &vtt) <= tol {
        return (vtt.transpose(), s);
    }
    log::debug!("SVD residual check failed on a {rows}x{cols} matrix; using the Gram route");
    let eig = SymmetricEigen::new(na * na.transpose());
    let k = rows.min(cols);
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k);
    let u = DMatrix::from_fn(rows, k, |i, j| eig.eigenvectors[(i, order[j])]);
    let s = order.iter().map(|&i| eig.eigenvalues[i].max(0.0).sqrt()).collect();
    (u, s)
}

fn check_rank(sigma: &[f64], r: usize, rows: usize, cols: usize) -> Result<()> {
    let s1 = sigma.first().copied().unwrap_or(0.0);
    let sr = sigma.get(r - 1).copied().unwrap_or(0.0);
    if !(s1 > 0.0) || sr < RANK_TOL * s1 {
        return Err(Error::DegenerateRank(format!(
            "sigma_{r} = {sr:.3e} against sigma_1 = {s1:.3e} for a {rows}x{cols} matrix"
        )));
    }
    if let Some(&next) = sigma.get(r) {
        if (sr - next) / s1 < GAP_WARN {
            log::warn!("singular gap at rank {r} is {:.3e} relative to sigma_1", (sr - next) / s1);
        }
    }
    Ok(())
}

fn svd_route(m: &Matrix, r: usize) -> Result<Matrix> {
    check_finite(m)?;
    let (rows, cols) = m.shape();
    let (u, s) = left_svd(m);
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| s[i]).collect();
    check_rank(&sigma, r, rows, cols)?;
    let mut out = Matrix::from_fn(rows, r, |i, j| u[(i, order[j])]);
    fix_signs(&mut out);
    Ok(out)
}

/// Leading eigenvectors of a symmetric PSD matrix `gram = M Mᵀ`.
///
/// Returns `None` when the spectrum is too flat or too small at rank `r` to
/// trust the squared singular values; callers then fall back to an SVD.
fn gram_route(gram: &Matrix, r: usize) -> Option<Matrix> {
    let p = gram.rows();
    let eig = SymmetricEigen::new(to_na(gram));
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lam: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let l1 = lam[0];
    if !(l1 > 0.0) || lam[r - 1] < GRAM_GAP_MIN * l1 {
        return None;
    }
    if r < p && (lam[r - 1] - lam[r]) < GRAM_GAP_MIN * l1 {
        return None;
    }
    let mut out = Matrix::from_fn(p, r, |i, j| eig.eigenvectors[(i, order[j])]);
    fix_signs(&mut out);
    Some(out)
}

fn check_r(rows: usize, cols: usize, r: usize) -> Result<()> {
    if r == 0 || r > rows.min(cols) {
        return Err(Error::DegenerateRank(format!(
            "rank {r} is not attainable for a {rows}x{cols} matrix"
        )));
    }
    Ok(())
}

/// Orthonormal basis of the top-`r` left singular subspace of `m`.
///
/// Columns are sign-normalized so the first nonzero entry is positive.
pub fn top_left_singular(m: &Matrix, r: usize) -> Result<Matrix> {
    let (rows, cols) = m.shape();
    check_r(rows, cols, r)?;
    check_finite(m)?;
    if rows < cols && rows * cols >= GRAM_ROUTE_MIN_LEN {
        let gram = m.matmul_tr(m)?;
        if let Some(u) = gram_route(&gram, r) {
            return Ok(u);
        }
    }
    svd_route(m, r)
}

/// Same as [`top_left_singular`] when the Gram matrix `m mᵀ` is already at hand.
///
/// `fallback` produces `m` itself and is only called when the Gram spectrum
/// cannot resolve the subspace reliably.
pub fn top_left_singular_from_gram(
    gram: &Matrix,
    cols: usize,
    r: usize,
    fallback: impl FnOnce() -> Matrix,
) -> Result<Matrix> {
    check_r(gram.rows(), cols, r)?;
    check_finite(gram)?;
    match gram_route(gram, r) {
        Some(u) => Ok(u),
        None => svd_route(&fallback(), r),
    }
}

/// Orthonormal `Q` with `span(Q) = span(m)`, from a QR factorization whose
/// `R` has a nonnegative diagonal.
pub fn qr_orthonormal(m: &Matrix) -> Result<Matrix> {
    let (rows, cols) = m.shape();
    if cols == 0 || cols > rows {
        return Err(Error::DegenerateRank(format!(
            "a {rows}x{cols} matrix cannot have full column rank"
        )));
    }
    check_finite(m)?;
    let (na, _) = to_na_scaled(m);
    let scale = na.norm();
    let qr = na.qr();
    let r = qr.r();
    let q = qr.q();
    let mut out = from_na(&q);
    for j in 0..cols {
        let d = r[(j, j)];
        if !(d.abs() > RANK_TOL * scale) {
            return Err(Error::DegenerateRank(format!(
                "column {} is dependent on the previous ones (|R_jj| = {:.3e})",
                j + 1,
                d.abs()
            )));
        }
        if d < 0.0 {
            out.column_mut(j).iter_mut().for_each(|v| *v = -*v);
        }
    }
    Ok(out)
}

/// `‖U Uᵀ − V Vᵀ‖_F` for orthonormal `U`, `V` with equal row counts.
pub fn projector_distance(u: &Matrix, v: &Matrix) -> Result<f64> {
    // ‖P−Q‖² = ‖U − V VᵀU‖² + ‖V − U UᵀV‖², which avoids cancellation.
    let vtu = v.tr_matmul(u)?;
    let a = u.sub(&v.matmul(&vtu)?)?;
    let b = v.sub(&u.matmul(&vtu.transpose())?)?;
    Ok((a.frob_norm_sq() + b.frob_norm_sq()).sqrt())
}

/// `‖UᵀU − I‖_F`.
pub fn orthonormality_defect(u: &Matrix) -> f64 {
    let g = u.tr_matmul(u).expect("shapes agree");
    g.sub(&Matrix::identity(u.cols())).expect("square").frob_norm()
}
