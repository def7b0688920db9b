//! Dense tensors with define-by-run reverse-mode differentiation.
//!
//! A [`Tape`] records each operation as it executes. Calling
//! [`Tape::backward`] on a scalar result walks the record in reverse and
//! returns gradients for every leaf created with `requires_grad`.
//!
//! Broadcasting is limited to [`Tape::add_row_bias`]; every other binary
//! operation requires identical shapes.

mod check;
mod tape;
mod tensor;

pub use check::{finite_diff_check, finite_diff_check_at, rel_error, FdReport, REL_ERROR_FLOOR};
pub use tape::{Elementwise, Gradients, Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("shape {shape:?} does not hold {len} elements")]
    Length { shape: Vec<usize>, len: usize },
    #[error("expected rank {expected}, got shape {shape:?}")]
    Rank { expected: usize, shape: Vec<usize> },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("usage error: {0}")]
    Usage(String),
}
