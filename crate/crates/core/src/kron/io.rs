//! JSON layout for Kronecker-sum operators: dense factor pairs with the same
//! interleaved re/im layout as `.ttj` cores.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::operator::KroneckerSumOperator;
use crate::error::{Result, TtError};
use crate::tt::io::{deinterleave, interleave, DTYPE};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FactorPairFile {
    pub size: usize,
    pub s: Vec<f64>,
    pub m: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OperatorFile {
    pub order: usize,
    pub dtype: String,
    pub factors: Vec<FactorPairFile>,
}

impl OperatorFile {
    pub fn from_operator(op: &KroneckerSumOperator) -> Self {
        OperatorFile {
            order: op.order(),
            dtype: DTYPE.into(),
            factors: op
                .factors()
                .iter()
                .map(|(s, m)| FactorPairFile {
                    size: s.dim(),
                    s: interleave(s.to_dense().into_iter()),
                    m: interleave(m.to_dense().into_iter()),
                })
                .collect(),
        }
    }

    pub fn to_operator(&self) -> Result<KroneckerSumOperator> {
        if self.dtype != DTYPE {
            return Err(TtError::Parse(format!("unsupported dtype {:?}", self.dtype)));
        }
        if self.order != self.factors.len() {
            return Err(TtError::Parse("order does not match the number of factor pairs".into()));
        }
        let pairs = self
            .factors
            .iter()
            .map(|f| {
                let n = f.size;
                let s = Array2::from_shape_vec((n, n), deinterleave(&f.s)?).map_err(|e| TtError::Parse(e.to_string()))?;
                let m = Array2::from_shape_vec((n, n), deinterleave(&f.m)?).map_err(|e| TtError::Parse(e.to_string()))?;
                Ok((s, m))
            })
            .collect::<Result<Vec<_>>>()?;
        KroneckerSumOperator::from_dense(pairs)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
