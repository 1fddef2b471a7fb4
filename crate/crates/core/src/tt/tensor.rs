use ndarray::{s, Array1, Array2, Array3, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::dense::{checked_product, to_zero_based, DenseTensor};
use crate::error::{Result, TtError};
use crate::linalg::{adjoint, qr_thin, svd_thin, truncation_rank, NOISE_FLOOR};
use crate::C64;

/// Default limit on the number of entries a tensor may be densified to.
pub const DEFAULT_DENSE_CAP: usize = 10_000_000;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Tensor in TT format. Core `k` has shape `(r_{k-1}, n_k, r_k)` with `r_0 = r_d = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TTTensor {
    cores: Vec<Array3<C64>>,
}

impl TTTensor {
    pub fn new(cores: Vec<Array3<C64>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(TtError::Argument("a TT tensor needs at least one core".into()));
        }
        if cores[0].dim().0 != 1 || cores[cores.len() - 1].dim().2 != 1 {
            return Err(TtError::Argument("boundary ranks must be 1".into()));
        }
        for (k, core) in cores.iter().enumerate() {
            let (a, n, b) = core.dim();
            if a == 0 || n == 0 || b == 0 {
                return Err(TtError::Argument(format!("core {} has an empty dimension", k + 1)));
            }
            if k + 1 < cores.len() && b != cores[k + 1].dim().0 {
                return Err(TtError::Argument(format!(
                    "rank mismatch between cores {} and {}",
                    k + 1,
                    k + 2
                )));
            }
        }
        let cores = cores.into_iter().map(|c| c.as_standard_layout().into_owned()).collect();
        Ok(TTTensor { cores })
    }

    pub(crate) fn from_cores_unchecked(cores: Vec<Array3<C64>>) -> Self {
        debug_assert!(TTTensor::new(cores.clone()).is_ok());
        TTTensor { cores }
    }

    /// Rank-1 tensor from per-mode vectors.
    pub fn rank_one(vectors: &[Array1<C64>]) -> Result<Self> {
        let cores = vectors
            .iter()
            .map(|v| v.clone().into_shape_with_order((1, v.len(), 1)).map_err(TtError::from))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    /// Tensor whose entries are all `value`.
    pub fn constant(modes: &[usize], value: C64) -> Result<Self> {
        let mut vectors: Vec<Array1<C64>> = modes.iter().map(|&n| Array1::from_elem(n, ONE)).collect();
        if let Some(first) = vectors.first_mut() {
            first.mapv_inplace(|z| z * value);
        }
        Self::rank_one(&vectors)
    }

    pub fn ones(modes: &[usize]) -> Result<Self> {
        Self::constant(modes, ONE)
    }

    /// Canonical rank-1 zero tensor.
    pub fn zeros(modes: &[usize]) -> Result<Self> {
        Self::constant(modes, ZERO)
    }

    /// Random tensor with i.i.d. standard complex Gaussian core entries.
    pub fn random<R: Rng + ?Sized>(modes: &[usize], ranks: &[usize], rng: &mut R) -> Result<Self> {
        if ranks.len() != modes.len() + 1 {
            return Err(TtError::Argument("rank chain must have d+1 entries".into()));
        }
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let cores = modes
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                Array3::from_shape_simple_fn((ranks[k], n, ranks[k + 1]), || {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re * scale, im * scale)
                })
            })
            .collect();
        Self::new(cores)
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dim().1).collect()
    }

    /// Rank chain `(r_0, ..., r_d)`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.dim().0).collect();
        r.push(1);
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Mean of the interior ranks, rounded to the nearest integer.
    pub fn averaged_rank(&self) -> usize {
        let r = self.ranks();
        let d = self.order();
        if d < 2 {
            return 1;
        }
        let sum: usize = r[1..d].iter().sum();
        (sum as f64 / (d - 1) as f64).round() as usize
    }

    /// Number of stored scalars.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }

    pub fn cores(&self) -> &[Array3<C64>] {
        &self.cores
    }

    pub fn core(&self, k: usize) -> &Array3<C64> {
        &self.cores[k]
    }

    pub fn into_cores(self) -> Vec<Array3<C64>> {
        self.cores
    }

    /// Entry at a 0-based multi-index; indices must be in range.
    pub fn entry(&self, idx: &[usize]) -> C64 {
        let mut row = Array1::from_elem(1, ONE);
        for (core, &i) in self.cores.iter().zip(idx) {
            row = row.dot(&core.index_axis(Axis(1), i));
        }
        row[0]
    }

    /// Entry at a 1-based multi-index.
    pub fn element(&self, idx: &[usize]) -> Result<C64> {
        let idx0 = to_zero_based(idx, &self.mode_sizes())?;
        Ok(self.entry(&idx0))
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        self.to_dense_capped(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_capped(&self, cap: usize) -> Result<DenseTensor> {
        let modes = self.mode_sizes();
        let needed = checked_product(&modes).unwrap_or(usize::MAX);
        if needed > cap {
            return Err(TtError::Size { needed, cap });
        }
        let mut acc = Array2::from_elem((1, 1), ONE);
        for core in &self.cores {
            let (r, n, r2) = core.dim();
            let m = unfold_right(core);
            let prod = acc.dot(&m);
            let rows = prod.nrows() * n;
            acc = prod.into_shape_with_order((rows, r2))?;
            debug_assert_eq!(r, m.nrows());
        }
        DenseTensor::new(modes, acc.into_iter().collect())
    }

    /// TT-SVD with per-step threshold `eps * |D| / sqrt(d-1)`.
    pub fn from_dense(dense: &DenseTensor, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(TtError::Argument("eps must be nonnegative".into()));
        }
        let modes = dense.shape().to_vec();
        let d = modes.len();
        let norm = dense.frobenius_norm();
        if norm == 0.0 {
            return Self::zeros(&modes);
        }
        if d == 1 {
            return Self::rank_one(&[Array1::from(dense.data().to_vec())]);
        }
        let delta = (eps / ((d - 1) as f64).sqrt()).max(NOISE_FLOOR) * norm;
        let mut cores = Vec::with_capacity(d);
        let mut rest = Array2::from_shape_vec((1, dense.len()), dense.data().to_vec())?;
        let mut r = 1;
        for (k, &n) in modes.iter().enumerate().take(d - 1) {
            let cols = rest.len() / (r * n);
            let m = rest.into_shape_with_order((r * n, cols))?;
            let (u, sv, vt) = svd_thin(&m.view())?;
            let (rk, _) = truncation_rank(sv.as_slice().unwrap(), delta, None);
            cores.push(u.slice(s![.., ..rk]).to_owned().into_shape_with_order((r, n, rk))?);
            let mut next = vt.slice(s![..rk, ..]).to_owned();
            for (mut row, &sigma) in next.rows_mut().into_iter().zip(sv.iter()) {
                row.mapv_inplace(|z| z * sigma);
            }
            rest = next;
            r = rk;
            debug_assert!(k < d - 1);
        }
        let n = modes[d - 1];
        cores.push(rest.into_shape_with_order((r, n, 1))?);
        Self::new(cores)
    }

    /// Frobenius norm via right-to-left orthogonalization.
    pub fn frobenius_norm(&self) -> f64 {
        let mut cores = self.cores.clone();
        right_orthogonalize(&mut cores).unwrap_or(f64::NAN)
    }

    pub fn conjugate(&self) -> TTTensor {
        TTTensor { cores: self.cores.iter().map(|c| c.mapv(|z| z.conj())).collect() }
    }

    /// Largest entry magnitude, by densification (tests and small problems only).
    pub fn max_abs_dense(&self, cap: usize) -> Result<f64> {
        Ok(self.to_dense_capped(cap)?.max_abs())
    }
}

/// View core `(r, n, r')` as `(r*n, r')`.
pub(crate) fn unfold_left(core: &Array3<C64>) -> Array2<C64> {
    let (r, n, r2) = core.dim();
    core.as_standard_layout().into_owned().into_shape_with_order((r * n, r2)).expect("contiguous core")
}

/// View core `(r, n, r')` as `(r, n*r')`.
pub(crate) fn unfold_right(core: &Array3<C64>) -> Array2<C64> {
    let (r, n, r2) = core.dim();
    core.as_standard_layout().into_owned().into_shape_with_order((r, n * r2)).expect("contiguous core")
}

pub(crate) fn fold(m: Array2<C64>, r: usize, n: usize, r2: usize) -> Array3<C64> {
    m.as_standard_layout().into_owned().into_shape_with_order((r, n, r2)).expect("fold shape")
}

/// Right-orthogonalize cores `d-1 .. 1` in place; returns the Frobenius norm
/// (the norm of the first core afterwards).
pub(crate) fn right_orthogonalize(cores: &mut [Array3<C64>]) -> Result<f64> {
    let d = cores.len();
    for k in (1..d).rev() {
        let (r, n, r2) = cores[k].dim();
        let m = unfold_right(&cores[k]);
        let (q, rr) = qr_thin(&adjoint(&m.view()).view())?;
        let rnew = q.ncols();
        cores[k] = fold(adjoint(&q.view()), rnew, n, r2);
        let (p, n0, _) = cores[k - 1].dim();
        let left = unfold_left(&cores[k - 1]).dot(&adjoint(&rr.view()));
        cores[k - 1] = fold(left, p, n0, rnew);
        debug_assert_eq!(rr.ncols(), r);
    }
    Ok(cores[0].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}

/// Left-orthogonalize cores `0 .. d-2` in place; returns the norm of the last core.
pub(crate) fn left_orthogonalize(cores: &mut [Array3<C64>]) -> Result<f64> {
    let d = cores.len();
    for k in 0..d.saturating_sub(1) {
        let (r, n, _) = cores[k].dim();
        let (q, rr) = qr_thin(&unfold_left(&cores[k]).view())?;
        let rnew = q.ncols();
        cores[k] = fold(q, r, n, rnew);
        let (_, n1, r3) = cores[k + 1].dim();
        let right = rr.dot(&unfold_right(&cores[k + 1]));
        cores[k + 1] = fold(right, rnew, n1, r3);
    }
    Ok(cores[d - 1].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}
