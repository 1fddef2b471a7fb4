//! Elementwise (Hadamard) inversion of TT tensors by Newton's iteration.

use serde::{Deserialize, Serialize};

use crate::algebra::{add, hadamard, hadamard_round, round, round_with_report, scale, sub};
use crate::error::{Result, TtError};
use crate::tt::{left_orthogonalize, TTTensor};
use crate::C64;

/// Step size for the gradient-descent warm start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `0.5 / M` with `M` the magnitude bound used for the initial guess.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub tol: f64,
    pub round_eps: f64,
    pub max_iter: usize,
    pub max_rank: Option<usize>,
    pub warm_start_steps: usize,
    pub warm_start_alpha: StepRule,
    /// Seed for the randomized product compression.
    pub seed: u64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            tol: 1e-6,
            round_eps: 1e-8,
            max_iter: 100,
            max_rank: None,
            warm_start_steps: 0,
            warm_start_alpha: StepRule::Auto,
            seed: 0,
        }
    }
}

impl InversionConfig {
    pub fn with_tolerances(tol: f64, round_eps: f64) -> Self {
        InversionConfig { tol, round_eps, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(TtError::Argument(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if !(self.round_eps > 0.0 && self.round_eps <= self.tol) {
            return Err(TtError::Argument(format!(
                "round_eps must lie in (0, tol], got {}",
                self.round_eps
            )));
        }
        if self.tol < 10.0 * self.round_eps {
            return Err(TtError::Argument(format!(
                "tol ({}) must be at least 10x round_eps ({})",
                self.tol, self.round_eps
            )));
        }
        if let StepRule::Fixed(a) = self.warm_start_alpha {
            if !(a > 0.0) {
                return Err(TtError::Argument("warm start step must be positive".into()));
            }
        }
        if self.max_rank == Some(0) {
            return Err(TtError::Argument("max_rank must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub final_ranks: Vec<usize>,
    pub converged: bool,
    pub cap_hit: bool,
}

impl InversionReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }
}

/// The all-ones tensor.
pub fn ones_tensor(modes: &[usize]) -> Result<TTTensor> {
    TTTensor::ones(modes)
}

/// Rounded `L ⊙ X - E`.
pub fn residual(l: &TTTensor, x: &TTTensor, round_eps: f64) -> Result<TTTensor> {
    let e = ones_tensor(&l.mode_sizes())?;
    round(&sub(&hadamard(l, x)?, &e)?, round_eps, None)
}

/// Relative residual of the unrounded `L ⊙ X - E`.
pub fn relative_residual(l: &TTTensor, x: &TTTensor) -> Result<f64> {
    let modes = l.mode_sizes();
    let e = ones_tensor(&modes)?;
    let r = sub(&hadamard(l, x)?, &e)?;
    let n: f64 = modes.iter().map(|&n| n as f64).product();
    Ok(r.frobenius_norm() / n.sqrt())
}

/// Upper bound on `max |l|`: the smaller of the left-orthogonal interface bound
/// and the product of per-core slice spectral norms (exact for rank one).
pub fn magnitude_bound(l: &TTTensor) -> Result<f64> {
    let mut cores = l.cores().to_vec();
    left_orthogonalize(&mut cores)?;
    let last = &cores[cores.len() - 1];
    let orth = (0..last.dim().1)
        .map(|i| last.slice(ndarray::s![.., i, 0]).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let mut product = 1.0;
    for core in l.cores() {
        let mut best: f64 = 0.0;
        for i in 0..core.dim().1 {
            let slice = core.index_axis(ndarray::Axis(1), i);
            let norm = if slice.len() == 1 {
                slice[[0, 0]].norm()
            } else {
                crate::linalg::singular_values(&slice)?.iter().cloned().fold(0.0, f64::max)
            };
            best = best.max(norm);
        }
        product *= best;
    }
    Ok(orth.min(product))
}

/// `conj(L) / M` with `M = bound^2`, so that `|1 - l x0| < 1` wherever `l != 0`.
pub fn initial_guess_with_bound(l: &TTTensor, bound: f64) -> Result<TTTensor> {
    let m = bound * bound;
    if !(m > 0.0) || !m.is_finite() {
        return Err(TtError::Degenerate(format!("magnitude bound {bound} cannot scale the initial guess")));
    }
    Ok(scale(&l.conjugate(), C64::new(1.0 / m, 0.0)))
}

pub fn default_initial_guess(l: &TTTensor) -> Result<TTTensor> {
    initial_guess_with_bound(l, magnitude_bound(l)?)
}

/// Rounded Newton iteration `X <- X - X ⊙ (L ⊙ X - E)`.
pub fn newton_solve(l: &TTTensor, x0: &TTTensor, cfg: &InversionConfig) -> Result<(TTTensor, InversionReport)> {
    cfg.validate()?;
    if l.mode_sizes() != x0.mode_sizes() {
        return Err(TtError::Argument("initial guess does not match the tensor modes".into()));
    }
    let modes = l.mode_sizes();
    let e = ones_tensor(&modes)?;
    let e_norm = modes.iter().map(|&n| n as f64).product::<f64>().sqrt();
    let mut x = x0.clone();
    let mut history = Vec::new();
    let mut cap_hit = false;
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let r_full = sub(&hadamard(l, &x)?, &e)?;
        let (r, capped) = round_with_report(&r_full, cfg.round_eps, cfg.max_rank)?;
        cap_hit |= capped;
        let res = r_full.frobenius_norm() / e_norm;
        if !res.is_finite() {
            return Err(TtError::NumericFailure(format!("non-finite residual at iteration {iterations}")));
        }
        history.push(res);
        if res <= cfg.tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        let update = sub(&e, &r)?;
        let (next, capped) = hadamard_round(
            &x,
            &update,
            cfg.round_eps,
            cfg.max_rank,
            cfg.seed.wrapping_add(iterations as u64),
        )?;
        cap_hit |= capped;
        x = next;
        iterations += 1;
    }
    let report = InversionReport {
        iterations,
        residual_history: history,
        final_ranks: x.ranks(),
        converged,
        cap_hit,
    };
    Ok((x, report))
}

/// Gradient descent `X <- X - alpha conj(L) ⊙ (L ⊙ X - E)` for `steps` steps
/// (for real `L` the conjugate is a no-op).
pub fn gradient_descent(l: &TTTensor, x0: &TTTensor, alpha: f64, steps: usize, round_eps: f64) -> Result<TTTensor> {
    Ok(gradient_descent_with_history(l, x0, alpha, steps, round_eps)?.0)
}

/// As [`gradient_descent`], also returning the relative residual before each step and after the last.
pub fn gradient_descent_with_history(
    l: &TTTensor,
    x0: &TTTensor,
    alpha: f64,
    steps: usize,
    round_eps: f64,
) -> Result<(TTTensor, Vec<f64>)> {
    if !(alpha > 0.0) {
        return Err(TtError::Argument("alpha must be positive".into()));
    }
    if l.mode_sizes() != x0.mode_sizes() {
        return Err(TtError::Argument("initial guess does not match the tensor modes".into()));
    }
    let modes = l.mode_sizes();
    let e = ones_tensor(&modes)?;
    let e_norm = modes.iter().map(|&n| n as f64).product::<f64>().sqrt();
    let mut x = x0.clone();
    let mut history = Vec::with_capacity(steps + 1);
    let lc = l.conjugate();
    for step in 0..=steps {
        let r = round(&sub(&hadamard(l, &x)?, &e)?, round_eps, None)?;
        let res = r.frobenius_norm() / e_norm;
        if !res.is_finite() {
            return Err(TtError::NumericFailure(format!("non-finite residual at step {step}")));
        }
        history.push(res);
        if step == steps {
            break;
        }
        let g = hadamard(&lc, &r)?;
        x = round(&add(&x, &scale(&g, C64::new(-alpha, 0.0)))?, round_eps, None)?;
    }
    Ok((x, history))
}

/// Initial guess, optional gradient-descent warm start, then Newton.
pub fn hadamard_inverse(l: &TTTensor, bound: Option<f64>, cfg: &InversionConfig) -> Result<(TTTensor, InversionReport)> {
    cfg.validate()?;
    let bound = match bound {
        Some(b) => b,
        None => magnitude_bound(l)?,
    };
    let mut x0 = initial_guess_with_bound(l, bound)?;
    if cfg.warm_start_steps > 0 {
        let alpha = match cfg.warm_start_alpha {
            StepRule::Auto => 0.5 / (bound * bound),
            StepRule::Fixed(a) => a,
        };
        x0 = gradient_descent(l, &x0, alpha, cfg.warm_start_steps, cfg.round_eps)?;
    }
    newton_solve(l, &x0, cfg)
}
