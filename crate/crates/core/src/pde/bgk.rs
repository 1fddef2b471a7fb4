//! Boltzmann-BGK in `d` space and `d` velocity dimensions.
//!
//! Mode `k` of a distribution tensor merges `x_k` and `v_k` into one index
//! `v * n_x + x` (velocity slow, space fast), so an operator factor is
//! `V^(k) ⊗ ∇` and the distribution has order `d`.

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use super::grid::{Boundary, GridSpec};
use crate::algebra::{add, hadamard, kronecker, round, scale, sub};
use crate::error::{Result, TtError};
use crate::hadamard::InversionConfig;
use crate::kron::{Factor, KronSumInverse, KroneckerSumOperator};
use crate::linalg::{identity, kron, solve_dense};
use crate::tt::{DenseTensor, TTTensor};
use crate::C64;

/// Accuracy of `from_dense` for non-separable Maxwellians.
pub const MAXWELLIAN_EPS: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BGKParams {
    pub kn: f64,
    pub bo: f64,
    pub k: f64,
    pub mu_exp: f64,
    pub dt: f64,
}

impl Default for BGKParams {
    fn default() -> Self {
        BGKParams { kn: 1.0, bo: 3.65, k: 1.0, mu_exp: 0.5, dt: 0.0025 }
    }
}

impl BGKParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.kn, self.bo, self.k, self.mu_exp];
        if all.iter().any(|&v| !(v > 0.0)) || !(self.dt >= 0.0) {
            return Err(TtError::Argument("BGK parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Macroscopic fields over the spatial grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroFields {
    pub rho: DenseTensor,
    pub u: Vec<DenseTensor>,
    pub t: DenseTensor,
}

impl MacroFields {
    pub fn constant(grid_x: &GridSpec, rho: f64, u: &[f64], t: f64) -> Result<Self> {
        if u.len() != grid_x.d {
            return Err(TtError::Argument("mean velocity needs d components".into()));
        }
        let shape = grid_x.modes();
        let fill = |v: f64| DenseTensor::from_fn(shape.clone(), |_| C64::new(v, 0.0));
        Ok(MacroFields { rho: fill(rho)?, u: u.iter().map(|&v| fill(v)).collect::<Result<_>>()?, t: fill(t)? })
    }
}

/// `[-pi, pi)^d` periodic grid.
pub fn bgk_grid(d: usize, n: usize) -> Result<GridSpec> {
    GridSpec::uniform(d, n, (-std::f64::consts::PI, std::f64::consts::PI), Boundary::Periodic)
}

/// Periodic first difference with `+1/h` above and `-1/h` below the diagonal,
/// wrapping at the corners.
pub fn bgk_gradient_matrix(n: usize, h: f64) -> Array2<C64> {
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[[i, (i + 1) % n]] += C64::new(1.0 / h, 0.0);
        m[[i, (i + n - 1) % n]] -= C64::new(1.0 / h, 0.0);
    }
    m
}

/// Stencil width of the centred difference on a grid of spacing `dx`.
pub fn central_stencil(dx: f64) -> f64 {
    2.0 * dx
}

fn check_grids(grid_x: &GridSpec, grid_v: &GridSpec) -> Result<()> {
    if grid_x.boundary != Boundary::Periodic {
        return Err(TtError::UnsupportedBoundary("BGK transport needs a periodic x-grid".into()));
    }
    if grid_x.d != grid_v.d {
        return Err(TtError::Argument("x and v grids must have the same dimension".into()));
    }
    Ok(())
}

/// Factors `(1/d) I + sign * (dt/2) V^(k) ⊗ ∇`, `M = I`.
fn transport_operator(grid_x: &GridSpec, grid_v: &GridSpec, dt: f64, sign: f64) -> Result<KroneckerSumOperator> {
    check_grids(grid_x, grid_v)?;
    let d = grid_x.d;
    let n = grid_x.n;
    let mut factors = Vec::with_capacity(d);
    for k in 0..d {
        let hs = central_stencil(grid_x.h(k));
        let columns = grid_v
            .points(k)
            .into_iter()
            .map(|v| {
                let a = sign * 0.5 * dt * v / hs;
                let mut c = vec![C64::new(0.0, 0.0); n];
                c[0] += 1.0 / d as f64;
                c[1 % n] -= a;
                c[(n - 1) % n] += a;
                c
            })
            .collect();
        factors.push((Factor::BlockCirculant { len: n, columns }, Factor::Identity(n * grid_v.n)));
    }
    KroneckerSumOperator::new(factors)
}

/// Left-hand Crank-Nicolson operator `I + dt/2 L_v`.
pub fn bgk_operator(grid_x: &GridSpec, grid_v: &GridSpec, params: &BGKParams) -> Result<KroneckerSumOperator> {
    transport_operator(grid_x, grid_v, params.dt, 1.0)
}

/// Right-hand Crank-Nicolson operator `I - dt/2 L_v`.
pub fn bgk_right_operator(grid_x: &GridSpec, grid_v: &GridSpec, params: &BGKParams) -> Result<KroneckerSumOperator> {
    transport_operator(grid_x, grid_v, params.dt, -1.0)
}

fn check_positive(t: &DenseTensor, what: &str) -> Result<()> {
    if t.data().iter().any(|z| !(z.re > 0.0)) {
        return Err(TtError::Domain(format!("{what} must be positive")));
    }
    Ok(())
}

fn is_constant(t: &DenseTensor) -> bool {
    t.data().iter().all(|&z| z == t.data()[0])
}

/// Local equilibrium `rho / (2 pi T / Bo)^{d/2} exp(-Bo |v - U|^2 / 2T)`.
pub fn maxwellian(fields: &MacroFields, grid_x: &GridSpec, grid_v: &GridSpec, bo: f64) -> Result<TTTensor> {
    check_grids(grid_x, grid_v)?;
    check_positive(&fields.t, "temperature")?;
    check_positive(&fields.rho, "density")?;
    let d = grid_x.d;
    let vs: Vec<Vec<f64>> = (0..d).map(|k| grid_v.points(k)).collect();
    if fields.u.iter().all(is_constant) && is_constant(&fields.t) {
        let t = fields.t.data()[0].re;
        let gauss: Vec<Array1<C64>> = (0..d)
            .map(|k| {
                let u = fields.u[k].data()[0].re;
                let norm = (2.0 * std::f64::consts::PI * t / bo).powf(-0.5);
                vs[k].iter().map(|&v| C64::new(norm * (-bo * (v - u).powi(2) / (2.0 * t)).exp(), 0.0)).collect()
            })
            .collect();
        let rho = TTTensor::from_dense(&fields.rho, 1e-14)?;
        return kronecker(&rho, &TTTensor::rank_one(&gauss)?);
    }
    TTTensor::from_dense(&maxwellian_dense(fields, grid_x, grid_v, bo)?, MAXWELLIAN_EPS)
}

/// Dense evaluation of the Maxwellian on the merged phase-space grid.
pub fn maxwellian_dense(fields: &MacroFields, grid_x: &GridSpec, grid_v: &GridSpec, bo: f64) -> Result<DenseTensor> {
    check_grids(grid_x, grid_v)?;
    check_positive(&fields.t, "temperature")?;
    let d = grid_x.d;
    let nx = grid_x.n;
    let vs: Vec<Vec<f64>> = (0..d).map(|k| grid_v.points(k)).collect();
    let mut x = vec![0usize; d];
    DenseTensor::from_fn(vec![nx * grid_v.n; d], |idx| {
        for k in 0..d {
            x[k] = idx[k] % nx;
        }
        let t = fields.t.at(&x).re;
        let dist2: f64 = (0..d).map(|k| (vs[k][idx[k] / nx] - fields.u[k].at(&x).re).powi(2)).sum();
        let rho = fields.rho.at(&x).re;
        C64::new(rho * (2.0 * std::f64::consts::PI * t / bo).powf(-(d as f64) / 2.0) * (-bo * dist2 / (2.0 * t)).exp(), 0.0)
    })
}

/// Contract the velocity half of every merged mode against a weight vector.
fn contract_velocity(f: &TTTensor, nx: usize, weights: &[Vec<f64>]) -> Result<TTTensor> {
    let cores = f
        .cores()
        .iter()
        .zip(weights)
        .map(|(c, w)| {
            let (r, _, r2) = c.dim();
            let mut out = Array3::zeros((r, nx, r2));
            for (j, &wj) in w.iter().enumerate() {
                for a in 0..r {
                    for x in 0..nx {
                        for b in 0..r2 {
                            out[[a, x, b]] += c[[a, j * nx + x, b]] * wj;
                        }
                    }
                }
            }
            out
        })
        .collect();
    TTTensor::new(cores)
}

/// Density, mean velocity and temperature by the rectangle rule in `v`.
pub fn moments(f: &TTTensor, grid_x: &GridSpec, grid_v: &GridSpec, bo: f64) -> Result<MacroFields> {
    check_grids(grid_x, grid_v)?;
    let d = grid_x.d;
    let nx = grid_x.n;
    if f.mode_sizes() != vec![nx * grid_v.n; d] {
        return Err(TtError::Argument("distribution does not match the phase-space grid".into()));
    }
    let vs: Vec<Vec<f64>> = (0..d).map(|k| grid_v.points(k)).collect();
    let base: Vec<Vec<f64>> = (0..d).map(|k| vec![grid_v.h(k); grid_v.n]).collect();
    let with = |k: usize, p: i32| {
        let mut w = base.clone();
        w[k] = vs[k].iter().map(|v| v.powi(p) * grid_v.h(k)).collect();
        w
    };
    let real = |t: TTTensor| -> Result<DenseTensor> { Ok(t.to_dense()?.map(|z| C64::new(z.re, 0.0))) };
    let rho = real(contract_velocity(f, nx, &base)?)?;
    if rho.data().iter().any(|z| !(z.re > 0.0)) {
        return Err(TtError::Degenerate("density is not positive everywhere".into()));
    }
    let mut u = Vec::with_capacity(d);
    let mut m2 = DenseTensor::zeros(grid_x.modes())?;
    for k in 0..d {
        let m1 = real(contract_velocity(f, nx, &with(k, 1))?)?;
        u.push(m1.zip_with(&rho, |a, b| a / b)?);
        let second = real(contract_velocity(f, nx, &with(k, 2))?)?;
        m2 = m2.zip_with(&second, |a, b| a + b)?;
    }
    let data: Vec<C64> = (0..rho.len())
        .map(|i| {
            let r = rho.data()[i].re;
            let u2: f64 = u.iter().map(|c| c.data()[i].re.powi(2)).sum();
            C64::new(bo / (d as f64 * r) * (m2.data()[i].re - r * u2), 0.0)
        })
        .collect();
    let t = DenseTensor::new(grid_x.modes(), data)?;
    Ok(MacroFields { rho, u, t })
}

/// `nu = rho K T^{1 - mu}`.
pub fn collision_frequency(fields: &MacroFields, params: &BGKParams) -> Result<DenseTensor> {
    fields.rho.zip_with(&fields.t, |r, t| C64::new(r.re * params.k * t.re.powf(1.0 - params.mu_exp), 0.0))
}

/// Initial state: `rho = 1 + 0.5 prod sin(x_k)`, `U = 0`, `T = 1`.
pub fn initial_fields(grid_x: &GridSpec) -> Result<MacroFields> {
    let d = grid_x.d;
    let xs: Vec<Vec<f64>> = (0..d).map(|k| grid_x.points(k)).collect();
    let rho = DenseTensor::from_fn(grid_x.modes(), |idx| {
        C64::new(1.0 + 0.5 * idx.iter().enumerate().map(|(k, &i)| xs[k][i].sin()).product::<f64>(), 0.0)
    })?;
    let mut fields = MacroFields::constant(grid_x, 1.0, &vec![0.0; d], 1.0)?;
    fields.rho = rho;
    Ok(fields)
}

/// Left operator, its inverse, and the right operator of one time step.
#[derive(Clone, Debug)]
pub struct BgkOperators {
    pub grid_x: GridSpec,
    pub grid_v: GridSpec,
    pub params: BGKParams,
    pub left: KroneckerSumOperator,
    pub right: KroneckerSumOperator,
    pub inverse: KronSumInverse,
}

impl BgkOperators {
    pub fn new(grid_x: &GridSpec, grid_v: &GridSpec, params: &BGKParams, cfg: &InversionConfig) -> Result<Self> {
        params.validate()?;
        let left = bgk_operator(grid_x, grid_v, params)?;
        let right = bgk_right_operator(grid_x, grid_v, params)?;
        let inverse = KronSumInverse::compute(&left, cfg)?;
        Ok(BgkOperators { grid_x: grid_x.clone(), grid_v: grid_v.clone(), params: params.clone(), left, right, inverse })
    }
}

/// One Crank-Nicolson step with explicit collision term.
pub fn bgk_step(f: &TTTensor, ops: &BgkOperators, eps: f64) -> Result<TTTensor> {
    let p = &ops.params;
    let fields = moments(f, &ops.grid_x, &ops.grid_v, p.bo)?;
    let feq = maxwellian(&fields, &ops.grid_x, &ops.grid_v, p.bo)?;
    let nu = TTTensor::from_dense(&collision_frequency(&fields, p)?, 1e-14)?;
    let ones_v = TTTensor::ones(&vec![ops.grid_v.n; ops.grid_x.d])?;
    let nu = kronecker(&nu, &ones_v)?;
    let coll = hadamard(&nu, &round(&sub(&feq, f)?, eps, None)?)?;
    let coll = scale(&round(&coll, eps, None)?, C64::new(p.dt / p.kn, 0.0));
    let rhs = round(&add(&ops.right.apply(f, Some(eps))?, &coll)?, eps, None)?;
    ops.inverse.solve(&rhs, eps)
}

/// Dense phase-space matrix `I + sign * dt/2 sum_k V^(k) ⊗ ∇_k`, built directly.
pub fn bgk_dense_matrix(grid_x: &GridSpec, grid_v: &GridSpec, dt: f64, sign: f64) -> Result<Array2<C64>> {
    check_grids(grid_x, grid_v)?;
    let d = grid_x.d;
    let m = grid_x.n * grid_v.n;
    let total = m.pow(d as u32);
    let mut out = identity(total);
    for k in 0..d {
        let v = Array2::from_diag(&grid_v.points(k).iter().map(|&x| C64::new(x, 0.0)).collect::<Array1<_>>());
        let grad = bgk_gradient_matrix(grid_x.n, central_stencil(grid_x.h(k)));
        let mut term = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        for i in 0..d {
            let f = if i == k { kron(&v.view(), &grad.view()) } else { identity(m) };
            term = kron(&term.view(), &f.view());
        }
        out.scaled_add(C64::new(sign * 0.5 * dt, 0.0), &term);
    }
    Ok(out)
}

fn dense_moments(f: &DenseTensor, grid_x: &GridSpec, grid_v: &GridSpec, bo: f64) -> Result<MacroFields> {
    let d = grid_x.d;
    let nx = grid_x.n;
    let dv: f64 = (0..d).map(|k| grid_v.h(k)).product();
    let vs: Vec<Vec<f64>> = (0..d).map(|k| grid_v.points(k)).collect();
    let mut rho = vec![0.0; nx.pow(d as u32)];
    let mut mom = vec![vec![0.0; rho.len()]; d];
    let mut e = vec![0.0; rho.len()];
    let mut x = vec![0usize; d];
    for (s, z) in f.data().iter().enumerate() {
        let mut rest = s;
        let mut v = vec![0.0; d];
        for k in (0..d).rev() {
            let i = rest % (nx * grid_v.n);
            rest /= nx * grid_v.n;
            x[k] = i % nx;
            v[k] = vs[k][i / nx];
        }
        let xi = x.iter().fold(0, |acc, &i| acc * nx + i);
        rho[xi] += z.re * dv;
        for k in 0..d {
            mom[k][xi] += v[k] * z.re * dv;
        }
        e[xi] += v.iter().map(|a| a * a).sum::<f64>() * z.re * dv;
    }
    let to = |v: Vec<f64>| DenseTensor::new(grid_x.modes(), v.into_iter().map(|a| C64::new(a, 0.0)).collect());
    let u: Vec<Vec<f64>> = mom.iter().map(|m| m.iter().zip(&rho).map(|(a, r)| a / r).collect()).collect();
    let t: Vec<f64> = (0..rho.len())
        .map(|i| bo / (d as f64 * rho[i]) * (e[i] - rho[i] * u.iter().map(|c| c[i] * c[i]).sum::<f64>()))
        .collect();
    Ok(MacroFields { rho: to(rho)?, u: u.into_iter().map(to).collect::<Result<_>>()?, t: to(t)? })
}

/// Dense reference step, independent of the TT code path.
pub fn bgk_step_dense(f: &DenseTensor, grid_x: &GridSpec, grid_v: &GridSpec, params: &BGKParams) -> Result<DenseTensor> {
    let fields = dense_moments(f, grid_x, grid_v, params.bo)?;
    let feq = maxwellian_dense(&fields, grid_x, grid_v, params.bo)?;
    let nu = collision_frequency(&fields, params)?;
    let nx = grid_x.n;
    let nxv = nx * grid_v.n;
    let left = bgk_dense_matrix(grid_x, grid_v, params.dt, 1.0)?;
    let right = bgk_dense_matrix(grid_x, grid_v, params.dt, -1.0)?;
    let fv = Array1::from(f.data().to_vec());
    let mut rhs = right.dot(&fv);
    let d = grid_x.d;
    for (s, r) in rhs.iter_mut().enumerate() {
        let mut rest = s;
        let mut x = vec![0usize; d];
        for k in (0..d).rev() {
            x[k] = (rest % nxv) % nx;
            rest /= nxv;
        }
        *r += nu.at(&x) * (params.dt / params.kn) * (feq.data()[s] - f.data()[s]);
    }
    DenseTensor::new(f.shape().to_vec(), solve_dense(&left.view(), &rhs)?.to_vec())
}
