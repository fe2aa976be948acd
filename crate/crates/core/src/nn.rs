//! Fully connected layers and weight initialization.

use rand::Rng;

use crate::error::Result;
use crate::fmath;
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

/// Dense layer computing `y = x W^T + b`; weights are `[out, in]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Tensor,
    pub bias: Tensor,
}

/// A layer's parameters bound to tape leaves for one forward pass.
///
/// Binding and application are split so layers that are applied several
/// times in one graph (the shared attention projections) register their
/// parameters exactly once.
#[derive(Debug, Clone, Copy)]
pub struct BoundDense {
    pub w: NodeId,
    pub b: NodeId,
}

impl DenseLayer {
    /// Zero-initialized layer (useful as a container before loading weights).
    pub fn zeros(in_dim: usize, out_dim: usize) -> DenseLayer {
        DenseLayer {
            weights: Tensor::zeros_matrix(out_dim, in_dim),
            bias: Tensor::zeros_vector(out_dim),
        }
    }

    /// He initialization for ReLU stacks: weights uniform on
    /// `[-sqrt(6/fan_in), sqrt(6/fan_in))` (variance `2/fan_in`), zero bias.
    pub fn init_he<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> DenseLayer {
        let limit = fmath::sqrt(6.0 / in_dim as f64);
        let mut layer = DenseLayer::zeros(in_dim, out_dim);
        for w in layer.weights.as_mut_slice() {
            *w = (2.0 * rng.random::<f64>() - 1.0) * limit;
        }
        layer
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    /// `(in + 1) * out`, counting the bias column.
    pub fn param_count(&self) -> usize {
        (self.in_dim() + 1) * self.out_dim()
    }

    /// Register this layer's parameters on the tape.
    pub fn bind(&self, tape: &mut Tape) -> BoundDense {
        BoundDense {
            w: tape.param(&self.weights),
            b: tape.param(&self.bias),
        }
    }

    /// Bind and apply in one step, for layers used exactly once per pass.
    pub fn forward(&self, tape: &mut Tape, x: NodeId) -> Result<NodeId> {
        self.bind(tape).apply(tape, x)
    }
}

impl BoundDense {
    pub fn apply(&self, tape: &mut Tape, x: NodeId) -> Result<NodeId> {
        tape.linear(self.w, self.b, x)
    }
}
