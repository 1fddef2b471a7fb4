//! Fixtures shared by the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ttinv_core::algebra::{add, scale};
use ttinv_core::kron::{joint_diagonalize, lambda_tensor, KroneckerSumOperator, DEFAULT_DIAG_TOL};
use ttinv_core::pde::{poisson_grid, poisson_operator, poisson_rhs, GridSpec};
use ttinv_core::{TTTensor, C64};

/// Uniform internal rank `rank` on `modes`.
pub fn random_tt(modes: &[usize], rank: usize, seed: u64) -> TTTensor {
    let mut ranks = vec![rank; modes.len() + 1];
    ranks[0] = 1;
    ranks[modes.len()] = 1;
    TTTensor::random(modes, &ranks, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// A rank-`2 * rank` sum whose second half is a small perturbation, so rounding has work to do.
pub fn sum_with_tail(modes: &[usize], rank: usize, seed: u64) -> TTTensor {
    let head = random_tt(modes, rank, seed);
    let tail = random_tt(modes, rank, seed + 1);
    add(&head, &scale(&tail, C64::new(1e-6, 0.0))).unwrap()
}

pub struct PoissonProblem {
    pub grid: GridSpec,
    pub op: KroneckerSumOperator,
    pub rhs: TTTensor,
    pub lambda: TTTensor,
}

pub fn poisson(d: usize, n: usize) -> PoissonProblem {
    let grid = poisson_grid(d, n).unwrap();
    let op = poisson_operator(&grid).unwrap();
    let rhs = poisson_rhs(&grid).unwrap();
    let fact = joint_diagonalize(&op, DEFAULT_DIAG_TOL).unwrap();
    let lambda = lambda_tensor(&fact).unwrap();
    PoissonProblem { grid, op, rhs, lambda }
}
