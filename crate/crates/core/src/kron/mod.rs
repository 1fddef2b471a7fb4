//! Kronecker-sum operators and their inversion through the eigenvalue tensor.

mod factor;
pub mod io;
mod inverse;
mod operator;
mod spectral;

pub use factor::Factor;
pub use inverse::{
    accuracy_bound, assemble_inverse, expanding, lambda_tensor, solve, solve_rounded, KronSumInverse, StageTimes,
    DEFAULT_DIAG_TOL,
};
pub use operator::{apply_operator, KroneckerSumOperator};
pub use spectral::{
    joint_diagonalize, transform_tt, DiagonalizationMethod, SpectralFactorization, Transform, MAX_EIGVEC_COND,
};
