//! Reverse-mode automatic differentiation over dense `f64` tensors.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, ParamCheck, Parameters, REL_ERROR_FLOOR};
pub use tape::{logistic, softmax, Gradients, Tape, Var};
pub use tensor::Tensor;
