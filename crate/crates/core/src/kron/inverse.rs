use std::time::Instant;

use ndarray::{Array3, Array4};
use serde::{Deserialize, Serialize};

use super::operator::KroneckerSumOperator;
use super::spectral::{joint_diagonalize, transform_tt, SpectralFactorization};
use crate::algebra::{hadamard, hadamard_round};
use crate::error::{Result, TtError};
use crate::hadamard::{hadamard_inverse, InversionConfig, InversionReport};
use crate::rank::{magnitude_extremes, DEFAULT_BUDGET};
use crate::tt::{TTMatrix, TTTensor};
use crate::C64;

/// Default residual tolerance for the joint diagonalization.
pub const DEFAULT_DIAG_TOL: f64 = 1e-9;

/// TT tensor of `sum_k lambda_1 ... mu_k ... lambda_d`, ranks `(1, 2, ..., 2, 1)`.
pub fn lambda_tensor(fact: &SpectralFactorization) -> Result<TTTensor> {
    let d = fact.order();
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let mu = &fact.mu[k];
        let la = &fact.lambda[k];
        let n = mu.len();
        let core = if d == 1 {
            Array3::from_shape_fn((1, n, 1), |(_, j, _)| mu[j])
        } else if k == 0 {
            Array3::from_shape_fn((1, n, 2), |(_, j, b)| if b == 0 { la[j] } else { mu[j] })
        } else if k == d - 1 {
            Array3::from_shape_fn((2, n, 1), |(a, j, _)| if a == 0 { mu[j] } else { la[j] })
        } else {
            Array3::from_shape_fn((2, n, 2), |(a, j, b)| match (a, b) {
                (0, 0) | (1, 1) => la[j],
                (0, 1) => mu[j],
                _ => C64::new(0.0, 0.0),
            })
        };
        cores.push(core);
    }
    TTTensor::new(cores)
}

/// Diagonal operator with diagonal `vec(x)`; ranks of `x` are kept.
pub fn expanding(x: &TTTensor) -> Result<TTMatrix> {
    let cores = x
        .cores()
        .iter()
        .map(|c| {
            let (a, n, b) = c.dim();
            let mut out = Array4::zeros((a, n, n, b));
            for p in 0..a {
                for i in 0..n {
                    for q in 0..b {
                        out[[p, i, i, q]] = c[[p, i, q]];
                    }
                }
            }
            out
        })
        .collect();
    TTMatrix::new(cores)
}

/// `(⊗ V_k) Expanding(X) (⊗ U_k)`, the inverse operator in TT-matrix form.
pub fn assemble_inverse(fact: &SpectralFactorization, xinv: &TTTensor) -> Result<TTMatrix> {
    if xinv.mode_sizes() != fact.mode_sizes() {
        return Err(TtError::Argument("inverse tensor does not match the factorization".into()));
    }
    let mut b = expanding(xinv)?;
    for k in 0..fact.order() {
        b = b.mode_product_rows(k + 1, &fact.v[k].to_dense().view())?;
        b = b.mode_product_cols(k + 1, &fact.u[k].to_dense().view())?;
    }
    Ok(b)
}

/// `u = V (X ⊙ (U f))` with the Hadamard product formed exactly.
pub fn solve(fact: &SpectralFactorization, xinv: &TTTensor, f: &TTTensor) -> Result<TTTensor> {
    if f.mode_sizes() != fact.mode_sizes() {
        return Err(TtError::Argument("right-hand side does not match the operator modes".into()));
    }
    let fhat = transform_tt(f, &fact.u)?;
    let y = hadamard(xinv, &fhat)?;
    transform_tt(&y, &fact.v)
}

/// As [`solve`], rounding the transformed right-hand side and the product at `eps`.
pub fn solve_rounded(fact: &SpectralFactorization, xinv: &TTTensor, f: &TTTensor, eps: f64, seed: u64) -> Result<TTTensor> {
    if f.mode_sizes() != fact.mode_sizes() {
        return Err(TtError::Argument("right-hand side does not match the operator modes".into()));
    }
    let fhat = crate::algebra::round(&transform_tt(f, &fact.u)?, eps, None)?;
    let (y, _) = hadamard_round(xinv, &fhat, eps, None, seed)?;
    transform_tt(&y, &fact.v)
}

/// `prod_k cond(U_k) cond(V_k) * kappa_l * rel_residual`.
pub fn accuracy_bound(fact: &SpectralFactorization, kappa_l: f64, rel_residual: f64) -> f64 {
    let amp: f64 = fact.cond_u.iter().zip(&fact.cond_v).map(|(a, b)| a * b).product();
    amp * kappa_l * rel_residual
}

/// Timings in seconds for the stages of the inversion.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub diagonalize: f64,
    pub lambda: f64,
    pub invert: f64,
}

/// Diagonalization plus Hadamard inverse of the eigenvalue tensor.
#[derive(Clone, Debug)]
pub struct KronSumInverse {
    pub fact: SpectralFactorization,
    pub lambda: TTTensor,
    pub xinv: TTTensor,
    pub report: InversionReport,
    /// Lower and upper bounds on the entry magnitudes of the eigenvalue tensor.
    pub magnitude: (f64, f64),
    pub times: StageTimes,
}

impl KronSumInverse {
    pub fn compute(op: &KroneckerSumOperator, cfg: &InversionConfig) -> Result<Self> {
        Self::compute_with_tol(op, cfg, DEFAULT_DIAG_TOL)
    }

    pub fn compute_with_tol(op: &KroneckerSumOperator, cfg: &InversionConfig, diag_tol: f64) -> Result<Self> {
        cfg.validate()?;
        let t0 = Instant::now();
        let fact = joint_diagonalize(op, diag_tol)?;
        let t1 = Instant::now();
        let lambda = lambda_tensor(&fact)?;
        let magnitude = magnitude_extremes(&fact, DEFAULT_BUDGET)?;
        if !(magnitude.0 > 0.0) {
            return Err(TtError::Degenerate("the eigenvalue tensor may vanish; operator is not invertible".into()));
        }
        let t2 = Instant::now();
        let (xinv, report) = hadamard_inverse(&lambda, Some(magnitude.1), cfg)?;
        let t3 = Instant::now();
        Ok(KronSumInverse {
            fact,
            lambda,
            xinv,
            report,
            magnitude,
            times: StageTimes {
                diagonalize: (t1 - t0).as_secs_f64(),
                lambda: (t2 - t1).as_secs_f64(),
                invert: (t3 - t2).as_secs_f64(),
            },
        })
    }

    /// Upper bound on `max|l| / min|l|`.
    pub fn kappa_l(&self) -> f64 {
        self.magnitude.1 / self.magnitude.0
    }

    pub fn accuracy_bound(&self) -> f64 {
        accuracy_bound(&self.fact, self.kappa_l(), self.report.final_residual())
    }

    pub fn assemble(&self) -> Result<TTMatrix> {
        assemble_inverse(&self.fact, &self.xinv)
    }

    pub fn solve(&self, f: &TTTensor, eps: f64) -> Result<TTTensor> {
        solve_rounded(&self.fact, &self.xinv, f, eps, 0x5eed)
    }
}
