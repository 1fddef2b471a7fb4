use serde::{Deserialize, Serialize};

use crate::error::{Result, TtError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Interior points of `[a, b]`, `h = (b - a) / (n + 1)`.
    Dirichlet,
    /// Left-closed points of `[a, b)`, `h = (b - a) / n`.
    Periodic,
}

/// Tensor-product grid with `n` points per dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub n: usize,
    pub domain: Vec<(f64, f64)>,
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, domain: Vec<(f64, f64)>, boundary: Boundary) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(TtError::Argument("grid needs d >= 1 and n >= 1".into()));
        }
        if domain.len() != d {
            return Err(TtError::Argument(format!("expected {d} intervals, got {}", domain.len())));
        }
        if domain.iter().any(|&(a, b)| !(b > a)) {
            return Err(TtError::Argument("every interval needs b > a".into()));
        }
        Ok(GridSpec { d, n, domain, boundary })
    }

    pub fn uniform(d: usize, n: usize, interval: (f64, f64), boundary: Boundary) -> Result<Self> {
        Self::new(d, n, vec![interval; d], boundary)
    }

    /// Mesh width in dimension `k` (0-based).
    pub fn h(&self, k: usize) -> f64 {
        let (a, b) = self.domain[k];
        match self.boundary {
            Boundary::Dirichlet => (b - a) / (self.n + 1) as f64,
            Boundary::Periodic => (b - a) / self.n as f64,
        }
    }

    /// Grid coordinates in dimension `k` (0-based).
    pub fn points(&self, k: usize) -> Vec<f64> {
        let a = self.domain[k].0;
        let h = self.h(k);
        match self.boundary {
            Boundary::Dirichlet => (1..=self.n).map(|i| a + i as f64 * h).collect(),
            Boundary::Periodic => (0..self.n).map(|i| a + i as f64 * h).collect(),
        }
    }

    pub fn modes(&self) -> Vec<usize> {
        vec![self.n; self.d]
    }
}
