use ndarray::{Array2, Array3};

use super::factor::Factor;
use crate::algebra::round;
use crate::error::{Result, TtError};
use crate::linalg::kron;
use crate::tt::{DenseTensor, TTTensor};
use crate::C64;

/// `L = sum_k M_1 ⊗ ... ⊗ S_k ⊗ ... ⊗ M_d` given as pairs `(S_k, M_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KroneckerSumOperator {
    factors: Vec<(Factor, Factor)>,
}

impl KroneckerSumOperator {
    pub fn new(factors: Vec<(Factor, Factor)>) -> Result<Self> {
        if factors.is_empty() {
            return Err(TtError::Argument("operator needs at least one factor pair".into()));
        }
        for (k, (s, m)) in factors.iter().enumerate() {
            s.validate()?;
            m.validate()?;
            if s.dim() != m.dim() {
                return Err(TtError::Argument(format!("factor pair {} has mismatched sizes", k + 1)));
            }
        }
        Ok(KroneckerSumOperator { factors })
    }

    pub fn from_dense(pairs: Vec<(Array2<C64>, Array2<C64>)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(s, m)| (Factor::Dense(s), Factor::Dense(m))).collect())
    }

    pub fn factors(&self) -> &[(Factor, Factor)] {
        &self.factors
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.factors.iter().map(|(s, _)| s.dim()).collect()
    }

    /// Dense matrix of the full operator; `cap` bounds the number of matrix entries.
    pub fn to_dense_matrix(&self, cap: usize) -> Result<Array2<C64>> {
        let n: usize = self.mode_sizes().iter().product();
        let needed = n.saturating_mul(n);
        if needed > cap {
            return Err(TtError::Size { needed, cap });
        }
        let mut total = Array2::zeros((n, n));
        for k in 0..self.order() {
            let mut term = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
            for (j, (s, m)) in self.factors.iter().enumerate() {
                let f = if j == k { s.to_dense() } else { m.to_dense() };
                term = kron(&term.view(), &f.view());
            }
            total += &term;
        }
        Ok(total)
    }

    /// `L u` in TT format (ranks at most `2 r_u`), optionally rounded.
    pub fn apply(&self, u: &TTTensor, eps: Option<f64>) -> Result<TTTensor> {
        if u.mode_sizes() != self.mode_sizes() {
            return Err(TtError::Argument("tensor modes do not match the operator".into()));
        }
        let d = self.order();
        if d == 1 {
            let out = TTTensor::new(vec![self.factors[0].0.apply_core(u.core(0))])?;
            return Ok(out);
        }
        let mut cores = Vec::with_capacity(d);
        for (k, (s, m)) in self.factors.iter().enumerate() {
            let su = s.apply_core(u.core(k));
            let mu = m.apply_core(u.core(k));
            let (r, n, r2) = su.dim();
            let core = if k == 0 {
                let mut c = Array3::zeros((1, n, 2 * r2));
                c.slice_mut(ndarray::s![.., .., ..r2]).assign(&su);
                c.slice_mut(ndarray::s![.., .., r2..]).assign(&mu);
                c
            } else if k == d - 1 {
                let mut c = Array3::zeros((2 * r, n, 1));
                c.slice_mut(ndarray::s![..r, .., ..]).assign(&mu);
                c.slice_mut(ndarray::s![r.., .., ..]).assign(&su);
                c
            } else {
                let mut c = Array3::zeros((2 * r, n, 2 * r2));
                c.slice_mut(ndarray::s![..r, .., ..r2]).assign(&mu);
                c.slice_mut(ndarray::s![r.., .., ..r2]).assign(&su);
                c.slice_mut(ndarray::s![r.., .., r2..]).assign(&mu);
                c
            };
            cores.push(core);
        }
        let out = TTTensor::new(cores)?;
        match eps {
            Some(e) => round(&out, e, None),
            None => Ok(out),
        }
    }

    /// Dense matrix-vector product (oracle).
    pub fn apply_dense(&self, u: &DenseTensor, cap: usize) -> Result<DenseTensor> {
        let a = self.to_dense_matrix(cap)?;
        let x = ndarray::Array1::from(u.data().to_vec());
        DenseTensor::new(self.mode_sizes(), a.dot(&x).to_vec())
    }
}

/// `apply_operator(op, u, eps)`: `L u` rounded at `eps`.
pub fn apply_operator(op: &KroneckerSumOperator, u: &TTTensor, eps: f64) -> Result<TTTensor> {
    op.apply(u, Some(eps))
}
