//! Minimal dense-tensor kernel set with exact backward passes.
//!
//! Everything is generic over the scalar type via [`Scalar`]; training runs
//! in `f32`, gradient checks in `f64` (see [`crate::Tensor32`] /
//! [`crate::Tensor64`]).

mod batchnorm;
mod conv;
mod dropout;
pub mod gradcheck;
mod linear;
mod loss;
mod pool;
mod relu;
mod sgd;
mod tensor;

pub use batchnorm::{BatchNorm2d, BnCache};
pub use conv::Conv2d;
pub use dropout::{dropout_backward, dropout_eval, dropout_train};
pub use gradcheck::{GradCheckEntry, GradCheckReport};
pub use linear::Linear;
pub use loss::softmax_cross_entropy;
pub use pool::{maxpool2x2_backward, maxpool2x2_forward};
pub use relu::{relu_backward, relu_forward};
pub use sgd::{scheduled_lr, SgdState};
pub use tensor::Tensor;

use num_traits::Float;
use thiserror::Error;

/// Scalar bound for all kernels: `f32` or `f64` in practice.
pub trait Scalar: Float + num_traits::NumAssign + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Scalar for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    fn to_f64(self) -> f64 {
        self
    }
    fn from_f64(v: f64) -> Self {
        v
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TensorError {
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("batch normalization requires batch size >= 2 in train mode, got {0}")]
    BatchTooSmall(usize),
}
