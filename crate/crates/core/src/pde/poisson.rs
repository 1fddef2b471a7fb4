use std::f64::consts::PI;

use ndarray::{Array1, Array2};

use super::grid::{Boundary, GridSpec};
use crate::algebra::add;
use crate::error::{Result, TtError};
use crate::kron::{Factor, KroneckerSumOperator};
use crate::tt::TTTensor;
use crate::C64;

/// `tridiag(-1, 2, -1) / h^2`.
pub fn negative_laplacian_1d(n: usize, h: f64) -> Array2<C64> {
    let mut m = Array2::zeros((n, n));
    let s = 1.0 / (h * h);
    for i in 0..n {
        m[[i, i]] = C64::new(2.0 * s, 0.0);
        if i + 1 < n {
            m[[i, i + 1]] = C64::new(-s, 0.0);
            m[[i + 1, i]] = C64::new(-s, 0.0);
        }
    }
    m
}

pub fn poisson_operator(grid: &GridSpec) -> Result<KroneckerSumOperator> {
    if grid.boundary != Boundary::Dirichlet {
        return Err(TtError::UnsupportedBoundary("the Poisson operator needs Dirichlet boundaries".into()));
    }
    KroneckerSumOperator::new(
        (0..grid.d)
            .map(|k| (Factor::Dense(negative_laplacian_1d(grid.n, grid.h(k))), Factor::Identity(grid.n)))
            .collect(),
    )
}

fn sampled(grid: &GridSpec, k: usize, f: impl Fn(f64) -> f64) -> Array1<C64> {
    grid.points(k).into_iter().map(|x| C64::new(f(x), 0.0)).collect()
}

/// `scale * sum_k sin(2 pi x_k) prod_{i != k} sin(pi x_i)` as a sum of rank-one terms.
fn separable_sum(grid: &GridSpec, scale: f64) -> Result<TTTensor> {
    let mut total: Option<TTTensor> = None;
    for k in 0..grid.d {
        let mut vectors: Vec<Array1<C64>> = (0..grid.d)
            .map(|i| if i == k { sampled(grid, i, |x| (2.0 * PI * x).sin()) } else { sampled(grid, i, |x| (PI * x).sin()) })
            .collect();
        vectors[0].mapv_inplace(|z| z * scale);
        let term = TTTensor::rank_one(&vectors)?;
        total = Some(match total {
            None => term,
            Some(t) => add(&t, &term)?,
        });
    }
    total.ok_or_else(|| TtError::Argument("empty grid".into()))
}

/// Right-hand side `6 pi^2 sum_k sin(2 pi x_k) prod_{i != k} sin(pi x_i)`.
pub fn poisson_rhs(grid: &GridSpec) -> Result<TTTensor> {
    separable_sum(grid, 6.0 * PI * PI)
}

/// Exact solution `sum_k sin(2 pi x_k) prod_{i != k} sin(pi x_i)`.
pub fn poisson_exact(grid: &GridSpec) -> Result<TTTensor> {
    separable_sum(grid, 1.0)
}

/// `[-1, 1]^d` Dirichlet grid.
pub fn poisson_grid(d: usize, n: usize) -> Result<GridSpec> {
    GridSpec::uniform(d, n, (-1.0, 1.0), Boundary::Dirichlet)
}
