//! Thin wrappers over LAPACK-backed dense kernels.

use ndarray::{s, Array1, Array2, ArrayView2, ShapeBuilder};
use ndarray_linalg::{Eig, Eigh, Inverse, JobSvd, Norm, Solve, SVDDC, QR, UPLO};

use crate::error::{Result, TtError};
use crate::C64;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Conjugate transpose.
pub fn adjoint(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn fro_norm(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Thin QR: for an m x n input returns Q (m x k) and R (k x n), k = min(m, n).
pub fn qr_thin(a: &ArrayView2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    if a.is_empty() {
        return Err(TtError::Argument("QR of an empty matrix".into()));
    }
    Ok(a.qr()?)
}

/// Thin SVD: U (m x k), singular values (k), V^H (k x n).
pub fn svd_thin(a: &ArrayView2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    let (u, s, vt) = a.to_owned().svddc(JobSvd::Some)?;
    match (u, vt) {
        (Some(u), Some(vt)) => Ok((u, s, vt)),
        _ => Err(TtError::Linalg("SVD returned no singular vectors".into())),
    }
}

pub fn singular_values(a: &ArrayView2<C64>) -> Result<Array1<f64>> {
    let (_, s, _) = a.to_owned().svddc(JobSvd::None)?;
    Ok(s)
}

/// 2-norm condition number.
pub fn cond2(a: &ArrayView2<C64>) -> Result<f64> {
    let s = singular_values(a)?;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(smax / smin)
    }
}

pub fn inverse(a: &ArrayView2<C64>) -> Result<Array2<C64>> {
    Ok(a.to_owned().inv()?)
}

pub fn solve_dense(a: &ArrayView2<C64>, b: &Array1<C64>) -> Result<Array1<C64>> {
    Ok(a.to_owned().solve_into(b.clone())?)
}

/// Eigendecomposition of a general square matrix.
pub fn eig(a: &ArrayView2<C64>) -> Result<(Array1<C64>, Array2<C64>)> {
    Ok(a.to_owned().eig()?)
}

/// Eigendecomposition of a Hermitian matrix (ascending eigenvalues).
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    // Row-major complex input comes back with conjugated eigenvectors.
    let mut f = Array2::zeros(a.raw_dim().f());
    f.assign(a);
    Ok(f.eigh(UPLO::Upper)?)
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    let (ma, na) = a.dim();
    let (mb, nb) = b.dim();
    let mut out = Array2::zeros((ma * mb, na * nb));
    for i in 0..ma {
        for j in 0..na {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            out.slice_mut(s![i * mb..(i + 1) * mb, j * nb..(j + 1) * nb])
                .zip_mut_with(b, |o, &x| *o = aij * x);
        }
    }
    out
}

pub fn is_hermitian(a: &ArrayView2<C64>, tol: f64) -> bool {
    let (m, n) = a.dim();
    if m != n {
        return false;
    }
    let scale = a.norm_l2().max(f64::MIN_POSITIVE);
    let mut diff = 0.0;
    for i in 0..n {
        for j in 0..n {
            diff += (a[[i, j]] - a[[j, i]].conj()).norm_sqr();
        }
    }
    diff.sqrt() <= tol * scale
}

pub fn is_identity(a: &ArrayView2<C64>) -> bool {
    let (m, n) = a.dim();
    m == n
        && a.indexed_iter()
            .all(|((i, j), &z)| z == if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

/// Relative size below which singular values count as rounding noise, even when `eps = 0`.
pub const NOISE_FLOOR: f64 = 8.0 * f64::EPSILON;

/// Smallest rank whose discarded tail energy is at most `delta^2`, then capped.
/// Returns (rank, cap_binding).
pub fn truncation_rank(s: &[f64], delta: f64, max_rank: Option<usize>) -> (usize, bool) {
    let mut tail = 0.0;
    let mut r = s.len();
    let budget = delta * delta;
    while r > 0 {
        let next = tail + s[r - 1] * s[r - 1];
        if next > budget {
            break;
        }
        tail = next;
        r -= 1;
    }
    let r = r.max(1);
    match max_rank {
        Some(cap) if cap >= 1 && r > cap => (cap, true),
        _ => (r, false),
    }
}
