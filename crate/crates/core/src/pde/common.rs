use ndarray::Array1;

use crate::algebra::sub;
use crate::error::{Result, TtError};
use crate::kron::KroneckerSumOperator;
use crate::linalg::solve_dense;
use crate::tt::{DenseTensor, TTTensor};

/// Largest system the dense reference solver factorizes.
pub const MAX_DENSE_SOLVE_DIM: usize = 8192;

/// `|u - ref| / |ref|` in TT arithmetic.
pub fn relative_error(u: &TTTensor, reference: &TTTensor) -> Result<f64> {
    let denom = reference.frobenius_norm();
    if denom == 0.0 {
        return Err(TtError::Domain("reference has zero norm".into()));
    }
    Ok(sub(u, reference)?.frobenius_norm() / denom)
}

pub fn dense_relative_error(u: &DenseTensor, reference: &DenseTensor) -> Result<f64> {
    let denom = reference.frobenius_norm();
    if denom == 0.0 {
        return Err(TtError::Domain("reference has zero norm".into()));
    }
    Ok(u.zip_with(reference, |a, b| a - b)?.frobenius_norm() / denom)
}

/// Dense LU solve of `L u = f`.
pub fn dense_reference_solve(op: &KroneckerSumOperator, f: &DenseTensor, cap: usize) -> Result<DenseTensor> {
    let n = op.mode_sizes().iter().fold(1usize, |acc, &m| acc.saturating_mul(m));
    if n > cap || n > MAX_DENSE_SOLVE_DIM {
        return Err(TtError::Size { needed: n, cap: cap.min(MAX_DENSE_SOLVE_DIM) });
    }
    if f.shape() != op.mode_sizes().as_slice() {
        return Err(TtError::Argument("right-hand side does not match the operator modes".into()));
    }
    let a = op.to_dense_matrix(usize::MAX)?;
    let x = solve_dense(&a.view(), &Array1::from(f.data().to_vec()))?;
    DenseTensor::new(f.shape().to_vec(), x.to_vec())
}
