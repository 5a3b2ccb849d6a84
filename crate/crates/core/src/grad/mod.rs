//! Reverse-mode differentiation over the fixed set of layers the classifier
//! uses, plus the Adam optimizer and a finite-difference checker.

mod adam;
mod conv;
mod gradcheck;
mod norm;
mod real;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use conv::{conv1d_backward, conv1d_forward, ConvGeom};
pub use gradcheck::{gradcheck, relative_error, GradcheckOptions, GradcheckReport, TensorCheck};
pub use norm::{RunningStats, BN_EPS, BN_MOMENTUM, LN_EPS};
pub use real::{gemm, Real};
pub use tape::{Fault, Graph, Mode, PoolKind, Var};
pub use tensor::Tensor;
