//! Fokker-Planck (Ornstein-Uhlenbeck) equation `rho_t = div(x rho) + Δrho / 2`
//! on a truncated box with zero Dirichlet data.

use ndarray::{Array1, Array2};

use super::grid::{Boundary, GridSpec};
use crate::error::{Result, TtError};
use crate::hadamard::InversionConfig;
use crate::kron::{Factor, KronSumInverse, KroneckerSumOperator};
use crate::linalg::{identity, kron, solve_dense};
use crate::tt::{DenseTensor, TTTensor};
use crate::C64;

/// `[-5, 5]^d` Dirichlet grid.
pub fn fp_grid(d: usize, n: usize) -> Result<GridSpec> {
    GridSpec::uniform(d, n, (-5.0, 5.0), Boundary::Dirichlet)
}

fn check_grid(grid: &GridSpec) -> Result<()> {
    if grid.boundary != Boundary::Dirichlet {
        return Err(TtError::UnsupportedBoundary("the Fokker-Planck operator needs Dirichlet boundaries".into()));
    }
    Ok(())
}

/// `I + X∇ + Δ/2` in dimension `k`, with `∇ = tridiag(-1, 0, 1) / 2h` and
/// `Δ = tridiag(1, -2, 1) / h^2`.
pub fn fp_generator_1d(grid: &GridSpec, k: usize) -> Array2<C64> {
    let n = grid.n;
    let h = grid.h(k);
    let x = grid.points(k);
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = C64::new(1.0 - 1.0 / (h * h), 0.0);
        if i + 1 < n {
            m[[i, i + 1]] = C64::new(x[i] / (2.0 * h) + 0.5 / (h * h), 0.0);
            m[[i + 1, i]] = C64::new(-x[i + 1] / (2.0 * h) + 0.5 / (h * h), 0.0);
        }
    }
    m
}

/// Per-dimension factor `(1/d) I + sign * (dt/2) (I + X∇ + Δ/2)`.
fn factor(grid: &GridSpec, k: usize, dt: f64, sign: f64) -> Array2<C64> {
    let mut s = fp_generator_1d(grid, k);
    s.mapv_inplace(|z| z * (sign * 0.5 * dt));
    for i in 0..grid.n {
        s[[i, i]] += 1.0 / grid.d as f64;
    }
    s
}

fn operator(grid: &GridSpec, dt: f64, sign: f64) -> Result<KroneckerSumOperator> {
    check_grid(grid)?;
    KroneckerSumOperator::new(
        (0..grid.d).map(|k| (Factor::Dense(factor(grid, k, dt, sign)), Factor::Identity(grid.n))).collect(),
    )
}

/// Left-hand Crank-Nicolson operator `I - dt/2 L_x`.
pub fn fp_operator(grid: &GridSpec, dt: f64) -> Result<KroneckerSumOperator> {
    operator(grid, dt, -1.0)
}

/// Right-hand Crank-Nicolson operator `I + dt/2 L_x`.
pub fn fp_right_operator(grid: &GridSpec, dt: f64) -> Result<KroneckerSumOperator> {
    operator(grid, dt, 1.0)
}

/// `h (X∇ + Δ/2)` in dimension `k`. Its off-diagonal products
/// `(x_i/2 + 1/2h)(1/2h - x_{i+1}/2)` must be positive for a real, simple spectrum.
pub fn fp_tridiagonal_a(grid: &GridSpec, k: usize) -> Result<Array2<C64>> {
    check_grid(grid)?;
    let h = grid.h(k);
    let x = grid.points(k);
    for i in 0..grid.n.saturating_sub(1) {
        let p = (x[i] / 2.0 + 0.5 / h) * (0.5 / h - x[i + 1] / 2.0);
        if !(p > 0.0) {
            return Err(TtError::Regime {
                index: i + 1,
                reason: format!("off-diagonal product {p:.3e} is not positive (h = {h:.4})"),
            });
        }
    }
    let mut a = fp_generator_1d(grid, k);
    for i in 0..grid.n {
        a[[i, i]] -= 1.0;
    }
    a.mapv_inplace(|z| z * h);
    Ok(a)
}

/// `sigma(t) = 1 + exp(-2t)`.
pub fn sigma(t: f64) -> f64 {
    1.0 + (-2.0 * t).exp()
}

/// `(pi sigma)^{-d/2} exp(-|x|^2 / sigma)` as a rank-one TT.
pub fn fp_exact(grid: &GridSpec, t: f64) -> Result<TTTensor> {
    if !(t >= 0.0) {
        return Err(TtError::Argument("time must be nonnegative".into()));
    }
    let s = sigma(t);
    let vectors: Vec<Array1<C64>> = (0..grid.d)
        .map(|k| {
            grid.points(k)
                .into_iter()
                .map(|x| C64::new((std::f64::consts::PI * s).powf(-0.5) * (-x * x / s).exp(), 0.0))
                .collect()
        })
        .collect();
    TTTensor::rank_one(&vectors)
}

#[derive(Clone, Debug)]
pub struct FPState {
    pub rho_tt: TTTensor,
    pub t: f64,
    pub sigma_ref: f64,
}

impl FPState {
    pub fn initial(grid: &GridSpec) -> Result<Self> {
        Ok(FPState { rho_tt: fp_exact(grid, 0.0)?, t: 0.0, sigma_ref: sigma(0.0) })
    }
}

#[derive(Clone, Debug)]
pub struct FpOperators {
    pub grid: GridSpec,
    pub dt: f64,
    pub left: KroneckerSumOperator,
    pub right: KroneckerSumOperator,
    pub inverse: KronSumInverse,
}

impl FpOperators {
    pub fn new(grid: &GridSpec, dt: f64, cfg: &InversionConfig) -> Result<Self> {
        if !(dt >= 0.0) {
            return Err(TtError::Argument("time step must be nonnegative".into()));
        }
        let left = fp_operator(grid, dt)?;
        let right = fp_right_operator(grid, dt)?;
        let inverse = KronSumInverse::compute(&left, cfg)?;
        Ok(FpOperators { grid: grid.clone(), dt, left, right, inverse })
    }
}

pub fn fp_step(state: &FPState, ops: &FpOperators, eps: f64) -> Result<FPState> {
    let rhs = ops.right.apply(&state.rho_tt, Some(eps))?;
    let rho_tt = ops.inverse.solve(&rhs, eps)?;
    let t = state.t + ops.dt;
    Ok(FPState { rho_tt, t, sigma_ref: sigma(t) })
}

/// Dense `I + sign * dt/2 L_x`, built from `X`, `∇` and `Δ` directly.
pub fn fp_dense_matrix(grid: &GridSpec, dt: f64, sign: f64) -> Result<Array2<C64>> {
    check_grid(grid)?;
    let n = grid.n;
    let mut out = identity(n.pow(grid.d as u32));
    for k in 0..grid.d {
        let h = grid.h(k);
        let x = grid.points(k);
        let mut grad = Array2::<C64>::zeros((n, n));
        let mut lap = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            lap[[i, i]] = C64::new(-2.0 / (h * h), 0.0);
            if i + 1 < n {
                grad[[i, i + 1]] = C64::new(0.5 / h, 0.0);
                grad[[i + 1, i]] = C64::new(-0.5 / h, 0.0);
                lap[[i, i + 1]] = C64::new(1.0 / (h * h), 0.0);
                lap[[i + 1, i]] = C64::new(1.0 / (h * h), 0.0);
            }
        }
        let xm = Array2::from_diag(&x.iter().map(|&v| C64::new(v, 0.0)).collect::<Array1<_>>());
        let gen = identity(n) + xm.dot(&grad) + lap.mapv(|z| z * 0.5);
        let mut term = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        for i in 0..grid.d {
            let f = if i == k { gen.clone() } else { identity(n) };
            term = kron(&term.view(), &f.view());
        }
        out.scaled_add(C64::new(sign * 0.5 * dt, 0.0), &term);
    }
    Ok(out)
}

/// Dense Crank-Nicolson step (oracle).
pub fn fp_step_dense(rho: &DenseTensor, grid: &GridSpec, dt: f64) -> Result<DenseTensor> {
    let left = fp_dense_matrix(grid, dt, -1.0)?;
    let right = fp_dense_matrix(grid, dt, 1.0)?;
    let rhs = right.dot(&Array1::from(rho.data().to_vec()));
    DenseTensor::new(rho.shape().to_vec(), solve_dense(&left.view(), &rhs)?.to_vec())
}

/// `sum rho h^d`.
pub fn mass(rho: &TTTensor, grid: &GridSpec) -> Result<f64> {
    let ones = TTTensor::ones(&grid.modes())?;
    let cell: f64 = (0..grid.d).map(|k| grid.h(k)).product();
    Ok(crate::algebra::inner(&ones, rho)?.re * cell)
}
