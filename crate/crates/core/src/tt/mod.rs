//! Dense and tensor-train containers.

mod dense;
pub mod io;
mod matrix;
mod tensor;

pub use dense::DenseTensor;
pub use matrix::TTMatrix;
pub use tensor::{TTTensor, DEFAULT_DENSE_CAP};

pub(crate) use tensor::{fold, left_orthogonalize, right_orthogonalize, unfold_left, unfold_right};
