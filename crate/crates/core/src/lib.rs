//! Tensor-train inversion of Kronecker-sum structured matrices.
//!
//! The pipeline diagonalizes each factor pair, builds the eigenvalue tensor in
//! TT format, inverts it elementwise with a rounded Newton iteration and maps
//! the result back. Certification of low-rank approximability and the three
//! model problems (Poisson, BGK, Fokker-Planck) live in [`rank`] and [`pde`].

extern crate blas_src;

pub mod algebra;
pub mod error;
pub mod hadamard;
pub mod kron;
pub mod linalg;
pub mod pde;
pub mod rank;
pub mod tt;

pub use num_complex::Complex64 as C64;

pub use error::{Result, TtError};
pub use tt::{DenseTensor, TTMatrix, TTTensor, DEFAULT_DENSE_CAP};
