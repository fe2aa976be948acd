//! Error type shared by every numerical module in the crate.

use crate::tensor::Shape;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of graph construction, optimization and loss evaluation.
///
/// All variants are plain data so the type stays `no_std`-friendly and can be
/// matched on by callers (the harness maps some of these onto exit codes).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two tensors met in an operation with incompatible shapes.
    #[error("{op}: dimension mismatch, expected {expected} but got {actual}")]
    DimensionMismatch {
        op: &'static str,
        expected: Shape,
        actual: Shape,
    },

    /// An input vector does not match the declared schema width.
    #[error("{op}: input has {actual} features, schema requires {expected}")]
    InputLength {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A scalar configuration value is outside its legal range.
    #[error("{what} is out of range: {value}")]
    InvalidParameter { what: &'static str, value: f64 },

    /// `Tape::backward` was asked to differentiate a non-scalar node.
    #[error("backward root must hold exactly one element, got {elements}")]
    NonScalarRoot { elements: usize },

    /// A relative-error objective met a target too close to zero.
    #[error("relative error is undefined for near-zero target at sample {index}")]
    ZeroTarget { index: usize },
}
