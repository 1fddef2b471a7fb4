//! Model problems.

pub mod bgk;
pub mod common;
pub mod fp;
pub mod grid;
pub mod poisson;

pub use bgk::{
    bgk_dense_matrix, bgk_grid, bgk_gradient_matrix, bgk_operator, bgk_right_operator, bgk_step, bgk_step_dense, collision_frequency,
    central_stencil, initial_fields, maxwellian, maxwellian_dense, moments, BGKParams, BgkOperators, MacroFields,
};
pub use common::{dense_reference_solve, dense_relative_error, relative_error, MAX_DENSE_SOLVE_DIM};
pub use fp::{
    fp_dense_matrix, fp_exact, fp_generator_1d, fp_grid, fp_operator, fp_right_operator, fp_step, fp_step_dense,
    fp_tridiagonal_a, mass, sigma, FPState, FpOperators,
};
pub use grid::{Boundary, GridSpec};
pub use poisson::{negative_laplacian_1d, poisson_exact, poisson_grid, poisson_operator, poisson_rhs};
