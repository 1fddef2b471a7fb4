//! `.ttj` files: JSON documents holding TT tensors, TT matrices or dense tensors.

use std::fs;
use std::path::Path;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::dense::DenseTensor;
use super::matrix::TTMatrix;
use super::tensor::TTTensor;
use crate::error::{Result, TtError};
use crate::C64;

pub const DTYPE: &str = "complex128";

/// On-disk layout. Dense tensors omit `ranks` and store one flat array in `cores`.
/// TT matrices add `row_modes`/`col_modes`; their `modes` are the flattened sizes.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TtjFile {
    pub order: usize,
    pub modes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<usize>>,
    pub dtype: String,
    pub cores: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_modes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col_modes: Option<Vec<usize>>,
}

pub fn interleave(values: impl IntoIterator<Item = C64>) -> Vec<f64> {
    values.into_iter().flat_map(|z| [z.re, z.im]).collect()
}

pub fn deinterleave(flat: &[f64]) -> Result<Vec<C64>> {
    if flat.len() % 2 != 0 {
        return Err(TtError::Parse("odd number of re/im values".into()));
    }
    Ok(flat.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect())
}

impl TtjFile {
    pub fn from_tt(t: &TTTensor) -> Self {
        TtjFile {
            order: t.order(),
            modes: t.mode_sizes(),
            ranks: Some(t.ranks()),
            dtype: DTYPE.into(),
            cores: t.cores().iter().map(|c| interleave(c.iter().cloned())).collect(),
            row_modes: None,
            col_modes: None,
        }
    }

    pub fn from_tt_matrix(m: &TTMatrix) -> Self {
        let mut f = Self::from_tt(&m.to_tt_tensor());
        f.row_modes = Some(m.row_sizes());
        f.col_modes = Some(m.col_sizes());
        f
    }

    pub fn from_dense(d: &DenseTensor) -> Self {
        TtjFile {
            order: d.order(),
            modes: d.shape().to_vec(),
            ranks: None,
            dtype: DTYPE.into(),
            cores: vec![interleave(d.data().iter().cloned())],
            row_modes: None,
            col_modes: None,
        }
    }

    fn check_header(&self) -> Result<()> {
        if self.dtype != DTYPE {
            return Err(TtError::Parse(format!("unsupported dtype {:?}", self.dtype)));
        }
        if self.order != self.modes.len() {
            return Err(TtError::Parse("order does not match the number of modes".into()));
        }
        Ok(())
    }

    pub fn to_tt(&self) -> Result<TTTensor> {
        self.check_header()?;
        let ranks = self.ranks.as_ref().ok_or_else(|| TtError::Parse("ranks missing".into()))?;
        if ranks.len() != self.order + 1 || self.cores.len() != self.order {
            return Err(TtError::Parse("rank chain or core count inconsistent with order".into()));
        }
        let cores = (0..self.order)
            .map(|k| {
                let vals = deinterleave(&self.cores[k])?;
                Array3::from_shape_vec((ranks[k], self.modes[k], ranks[k + 1]), vals)
                    .map_err(|e| TtError::Parse(format!("core {}: {e}", k + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        TTTensor::new(cores)
    }

    pub fn to_tt_matrix(&self) -> Result<TTMatrix> {
        let rows = self.row_modes.as_ref().ok_or_else(|| TtError::Parse("row_modes missing".into()))?;
        let cols = self.col_modes.as_ref().ok_or_else(|| TtError::Parse("col_modes missing".into()))?;
        TTMatrix::from_tt_tensor(&self.to_tt()?, rows, cols)
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        self.check_header()?;
        if self.cores.len() != 1 {
            return Err(TtError::Parse("dense file must hold exactly one flat array".into()));
        }
        DenseTensor::new(self.modes.clone(), deinterleave(&self.cores[0])?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

pub fn write_tt(path: &Path, t: &TTTensor) -> Result<()> {
    TtjFile::from_tt(t).write(path)
}

pub fn read_tt(path: &Path) -> Result<TTTensor> {
    TtjFile::read(path)?.to_tt()
}

pub fn write_tt_matrix(path: &Path, m: &TTMatrix) -> Result<()> {
    TtjFile::from_tt_matrix(m).write(path)
}

pub fn read_tt_matrix(path: &Path) -> Result<TTMatrix> {
    TtjFile::read(path)?.to_tt_matrix()
}

pub fn write_dense(path: &Path, d: &DenseTensor) -> Result<()> {
    TtjFile::from_dense(d).write(path)
}

pub fn read_dense(path: &Path) -> Result<DenseTensor> {
    TtjFile::read(path)?.to_dense()
}
