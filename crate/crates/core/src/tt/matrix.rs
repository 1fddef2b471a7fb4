use ndarray::{Array2, Array3, Array4, ArrayView2};

use super::dense::checked_product;
use super::tensor::{TTTensor, DEFAULT_DENSE_CAP};
use crate::error::{Result, TtError};
use crate::C64;

/// Operator in TT format. Core `k` has shape `(r_{k-1}, m_k, n_k, r_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TTMatrix {
    cores: Vec<Array4<C64>>,
}

impl TTMatrix {
    pub fn new(cores: Vec<Array4<C64>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(TtError::Argument("a TT matrix needs at least one core".into()));
        }
        if cores[0].dim().0 != 1 || cores[cores.len() - 1].dim().3 != 1 {
            return Err(TtError::Argument("boundary ranks must be 1".into()));
        }
        for k in 0..cores.len() {
            let (a, m, n, b) = cores[k].dim();
            if a == 0 || m == 0 || n == 0 || b == 0 {
                return Err(TtError::Argument(format!("core {} has an empty dimension", k + 1)));
            }
            if k + 1 < cores.len() && b != cores[k + 1].dim().0 {
                return Err(TtError::Argument(format!("rank mismatch after core {}", k + 1)));
            }
        }
        let cores = cores.into_iter().map(|c| c.as_standard_layout().into_owned()).collect();
        Ok(TTMatrix { cores })
    }

    pub fn identity(sizes: &[usize]) -> Result<Self> {
        let cores = sizes
            .iter()
            .map(|&n| {
                let mut c = Array4::zeros((1, n, n, 1));
                for i in 0..n {
                    c[[0, i, i, 0]] = C64::new(1.0, 0.0);
                }
                c
            })
            .collect();
        Self::new(cores)
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn row_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dim().1).collect()
    }

    pub fn col_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dim().2).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.dim().0).collect();
        r.push(1);
        r
    }

    pub fn cores(&self) -> &[Array4<C64>] {
        &self.cores
    }

    /// Flatten each `(m_k, n_k)` pair into one mode of size `m_k * n_k` (row index slow).
    pub fn to_tt_tensor(&self) -> TTTensor {
        let cores = self
            .cores
            .iter()
            .map(|c| {
                let (a, m, n, b) = c.dim();
                c.clone().into_shape_with_order((a, m * n, b)).expect("contiguous core")
            })
            .collect();
        TTTensor::from_cores_unchecked(cores)
    }

    /// Inverse of [`TTMatrix::to_tt_tensor`].
    pub fn from_tt_tensor(t: &TTTensor, rows: &[usize], cols: &[usize]) -> Result<Self> {
        let modes = t.mode_sizes();
        if rows.len() != modes.len() || cols.len() != modes.len() {
            return Err(TtError::Argument("row/col size lists must match the order".into()));
        }
        let cores = t
            .cores()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let (a, mn, b) = c.dim();
                if rows[k] * cols[k] != mn {
                    return Err(TtError::Argument(format!("mode {} is not {}x{}", k + 1, rows[k], cols[k])));
                }
                Ok(c.clone().into_shape_with_order((a, rows[k], cols[k], b))?)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    pub fn to_dense_matrix(&self) -> Result<Array2<C64>> {
        self.to_dense_matrix_capped(DEFAULT_DENSE_CAP)
    }

    /// Dense matrix with row and column multi-indices in row-major order.
    pub fn to_dense_matrix_capped(&self, cap: usize) -> Result<Array2<C64>> {
        let rows = self.row_sizes();
        let cols = self.col_sizes();
        let m = checked_product(&rows).unwrap_or(usize::MAX);
        let n = checked_product(&cols).unwrap_or(usize::MAX);
        let needed = m.checked_mul(n).unwrap_or(usize::MAX);
        if needed > cap {
            return Err(TtError::Size { needed, cap });
        }
        let flat = self.to_tt_tensor().to_dense_capped(cap)?;
        let d = self.order();
        let mut out = Array2::zeros((m, n));
        let mut idx = vec![0usize; d];
        let mut ri = vec![0usize; d];
        let mut ci = vec![0usize; d];
        let shape: Vec<usize> = rows.iter().zip(&cols).map(|(a, b)| a * b).collect();
        for &val in flat.data() {
            for k in 0..d {
                ri[k] = idx[k] / cols[k];
                ci[k] = idx[k] % cols[k];
            }
            let i = ri.iter().zip(&rows).fold(0, |acc, (&x, &s)| acc * s + x);
            let j = ci.iter().zip(&cols).fold(0, |acc, (&x, &s)| acc * s + x);
            out[[i, j]] = val;
            super::dense::increment(&mut idx, &shape);
        }
        Ok(out)
    }

    /// Matrix-vector product in TT format; ranks multiply.
    pub fn apply(&self, x: &TTTensor) -> Result<TTTensor> {
        if x.mode_sizes() != self.col_sizes() {
            return Err(TtError::Argument("operator columns do not match the tensor modes".into()));
        }
        let cores = self
            .cores
            .iter()
            .zip(x.cores())
            .map(|(a, xc)| {
                let (ra, m, n, rb) = a.dim();
                let (sa, _, sb) = xc.dim();
                let mut out = Array3::zeros((ra * sa, m, rb * sb));
                for p in 0..ra {
                    for q in 0..rb {
                        for i in 0..m {
                            for j in 0..n {
                                let aij = a[[p, i, j, q]];
                                if aij == C64::new(0.0, 0.0) {
                                    continue;
                                }
                                for s in 0..sa {
                                    for t in 0..sb {
                                        out[[p * sa + s, i, q * sb + t]] += aij * xc[[s, j, t]];
                                    }
                                }
                            }
                        }
                    }
                }
                out
            })
            .collect();
        TTTensor::new(cores)
    }

    /// Left-multiply the row index of core `mode` (1-based) by `w`.
    pub fn mode_product_rows(&self, mode: usize, w: &ArrayView2<C64>) -> Result<TTMatrix> {
        let k = self.check_mode(mode)?;
        let (a, m, n, b) = self.cores[k].dim();
        if w.ncols() != m {
            return Err(TtError::Argument("row factor has the wrong column count".into()));
        }
        let p = w.nrows();
        let mut out = Array4::zeros((a, p, n, b));
        for s in 0..a {
            for t in 0..b {
                let slice = self.cores[k].slice(ndarray::s![s, .., .., t]);
                out.slice_mut(ndarray::s![s, .., .., t]).assign(&w.dot(&slice));
            }
        }
        let mut cores = self.cores.clone();
        cores[k] = out;
        Self::new(cores)
    }

    /// Right-multiply the column index of core `mode` (1-based) by `w`.
    pub fn mode_product_cols(&self, mode: usize, w: &ArrayView2<C64>) -> Result<TTMatrix> {
        let k = self.check_mode(mode)?;
        let (a, m, n, b) = self.cores[k].dim();
        if w.nrows() != n {
            return Err(TtError::Argument("column factor has the wrong row count".into()));
        }
        let p = w.ncols();
        let mut out = Array4::zeros((a, m, p, b));
        for s in 0..a {
            for t in 0..b {
                let slice = self.cores[k].slice(ndarray::s![s, .., .., t]);
                out.slice_mut(ndarray::s![s, .., .., t]).assign(&slice.dot(w));
            }
        }
        let mut cores = self.cores.clone();
        cores[k] = out;
        Self::new(cores)
    }

    fn check_mode(&self, mode: usize) -> Result<usize> {
        if mode < 1 || mode > self.order() {
            return Err(TtError::Argument(format!("mode {mode} outside 1..={}", self.order())));
        }
        Ok(mode - 1)
    }
}
