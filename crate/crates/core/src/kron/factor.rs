use ndarray::{Array2, Array3};

use crate::error::{Result, TtError};
use crate::linalg::identity;
use crate::C64;

/// One square factor of a Kronecker-sum operator.
#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    Dense(Array2<C64>),
    Identity(usize),
    /// Block-diagonal matrix of circulant blocks of size `len`; each block is
    /// given by its first column.
    BlockCirculant { len: usize, columns: Vec<Vec<C64>> },
}

impl Factor {
    pub fn dim(&self) -> usize {
        match self {
            Factor::Dense(m) => m.nrows(),
            Factor::Identity(n) => *n,
            Factor::BlockCirculant { len, columns } => len * columns.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Factor::Dense(m) if m.nrows() != m.ncols() || m.nrows() == 0 => {
                Err(TtError::Argument(format!("factor must be square and nonempty, got {:?}", m.dim())))
            }
            Factor::Identity(0) => Err(TtError::Argument("identity factor of size 0".into())),
            Factor::BlockCirculant { len, columns } => {
                if *len == 0 || columns.is_empty() || columns.iter().any(|c| c.len() != *len) {
                    Err(TtError::Argument("malformed block-circulant factor".into()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Factor::Identity(_) => true,
            Factor::Dense(m) => crate::linalg::is_identity(&m.view()),
            Factor::BlockCirculant { columns, .. } => columns.iter().all(|c| {
                c.iter().enumerate().all(|(i, &z)| z == if i == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
            }),
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        match self {
            Factor::Dense(m) => m.clone(),
            Factor::Identity(n) => identity(*n),
            Factor::BlockCirculant { len, columns } => {
                let n = *len;
                let mut m = Array2::zeros((n * columns.len(), n * columns.len()));
                for (b, col) in columns.iter().enumerate() {
                    for i in 0..n {
                        for j in 0..n {
                            m[[b * n + i, b * n + j]] = col[(i + n - j) % n];
                        }
                    }
                }
                m
            }
        }
    }

    /// Product `F x` along the middle index of a core `(r, n, r')`.
    pub fn apply_core(&self, core: &Array3<C64>) -> Array3<C64> {
        match self {
            Factor::Dense(m) => crate::algebra::core_mode_product(core, &m.view()),
            Factor::Identity(_) => core.clone(),
            Factor::BlockCirculant { len, columns } => {
                let n = *len;
                let (r, _, r2) = core.dim();
                let mut out = Array3::zeros(core.dim());
                for (b, col) in columns.iter().enumerate() {
                    let nz: Vec<(usize, C64)> =
                        col.iter().enumerate().filter(|(_, z)| **z != C64::new(0.0, 0.0)).map(|(m, z)| (m, *z)).collect();
                    for a in 0..r {
                        for i in 0..n {
                            for &(m, cm) in &nz {
                                let j = (i + n - m) % n;
                                for t in 0..r2 {
                                    out[[a, b * n + i, t]] += cm * core[[a, b * n + j, t]];
                                }
                            }
                        }
                    }
                }
                out
            }
        }
    }
}
