//! Dense `f64` arrays with a recorded computation graph, reverse-mode
//! gradients, a central-difference checker and Adam.
//!
//! The op set is closed: every operation the networks need is a method on
//! [`Graph`] with a hand-written backward rule. The only broadcasting is
//! scalar broadcast plus the explicit row/column forms (`add_row`,
//! `mul_row`, `mul_col`).

mod adam;
mod check;
mod graph;
mod param;
mod tensor;

pub use adam::{adam_update, AdamConfig};
pub use check::{finite_difference_check, FdError, FdReport};
pub use graph::{Graph, Var, NORM_EPS};
pub use param::{ParamId, ParamStore, Parameter};
pub use tensor::Tensor;

use alloc::vec::Vec;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DiffError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{op}: axis {axis} invalid for shape {shape:?}")]
    Axis {
        op: &'static str,
        axis: usize,
        shape: Vec<usize>,
    },
    #[error("{op}: index of length {len} invalid for {rows} rows")]
    Index {
        op: &'static str,
        len: usize,
        rows: usize,
    },
    #[error("backward root must be scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
}

impl DiffError {
    pub(crate) fn shapes(op: &'static str, left: &[usize], right: &[usize]) -> Self {
        Self::ShapeMismatch {
            op,
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests;
