use ndarray::Array2;

use crate::error::{Result, TtError};
use crate::C64;

/// Full tensor stored row-major with mode 1 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

pub(crate) fn checked_product(shape: &[usize]) -> Option<usize> {
    shape.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n))
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&n| n == 0) {
            return Err(TtError::Argument(format!("invalid mode sizes {shape:?}")));
        }
        let len = checked_product(&shape)
            .ok_or_else(|| TtError::Argument("mode-size product overflows".into()))?;
        if len != data.len() {
            return Err(TtError::Argument(format!(
                "expected {len} entries for shape {shape:?}, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = checked_product(&shape).unwrap_or(0);
        Self::new(shape, vec![C64::new(0.0, 0.0); len])
    }

    /// Build from a closure over 0-based multi-indices.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> C64) -> Result<Self> {
        let len = checked_product(&shape)
            .ok_or_else(|| TtError::Argument("mode-size product overflows".into()))?;
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Self::new(shape, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Linear offset of a 0-based multi-index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Entry at a 0-based multi-index (panics when out of range).
    pub fn at(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    /// Entry at a 1-based multi-index.
    pub fn element(&self, idx: &[usize]) -> Result<C64> {
        let idx0 = to_zero_based(idx, &self.shape)?;
        Ok(self.at(&idx0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> DenseTensor {
        DenseTensor { shape: self.shape.clone(), data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn zip_with(&self, other: &DenseTensor, f: impl Fn(C64, C64) -> C64) -> Result<DenseTensor> {
        if self.shape != other.shape {
            return Err(TtError::Argument("dense shape mismatch".into()));
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Unfolding with modes 1..=k as rows and k+1..=d as columns.
    pub fn matricize(&self, k: usize) -> Result<Array2<C64>> {
        let d = self.order();
        if k < 1 || k >= d {
            return Err(TtError::Argument(format!("split index {k} outside 1..={}", d.saturating_sub(1))));
        }
        let rows: usize = self.shape[..k].iter().product();
        let cols: usize = self.shape[k..].iter().product();
        Ok(Array2::from_shape_vec((rows, cols), self.data.clone())?)
    }

    /// Inverse of [`DenseTensor::matricize`].
    pub fn from_matricization(shape: Vec<usize>, k: usize, m: &Array2<C64>) -> Result<Self> {
        let d = shape.len();
        if k < 1 || k >= d {
            return Err(TtError::Argument(format!("split index {k} outside 1..={}", d.saturating_sub(1))));
        }
        let rows: usize = shape[..k].iter().product();
        let cols: usize = shape[k..].iter().product();
        if m.dim() != (rows, cols) {
            return Err(TtError::Argument("matrix shape does not match the split".into()));
        }
        Self::new(shape, m.iter().cloned().collect())
    }
}

/// Advance a row-major multi-index (last mode fastest).
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}

pub(crate) fn to_zero_based(idx: &[usize], shape: &[usize]) -> Result<Vec<usize>> {
    if idx.len() != shape.len() {
        return Err(TtError::Bounds(format!("expected {} indices, got {}", shape.len(), idx.len())));
    }
    idx.iter()
        .zip(shape)
        .enumerate()
        .map(|(k, (&i, &n))| {
            if i < 1 || i > n {
                Err(TtError::Bounds(format!("index {i} for mode {} of size {n}", k + 1)))
            } else {
                Ok(i - 1)
            }
        })
        .collect()
}
