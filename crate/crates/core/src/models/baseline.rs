//! Conventional MLP baselines the physical-embedded networks are compared
//! against. Both treat the 18 inputs as one flat vector.
//!
//! Hidden widths were solved so the full-width models land on the agreed
//! parameter budgets (~100k for the 8-layer residual net, ~84k for the
//! 6-layer multi-branch net) while keeping round layer sizes:
//!
//! * `MlpRes`: 18 -> 256, two bottleneck residual blocks
//!   (256 -> 64 -> 256 with skip connection and outer ReLU), then
//!   256 -> 100 -> 32 -> 1. Exactly 100,005 parameters at multiplier 1.
//! * `MlpMul`: two parallel branches 18 -> 128 -> 144 whose features are
//!   concatenated into a 288-wide trunk 288 -> 144 -> 1. Exactly 83,777
//!   parameters at multiplier 1.

use rand::Rng;

use crate::error::Result;
use crate::nn::DenseLayer;
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

use super::{scaled_width, Model, ModelKind, ModelSpec};

const RES_TRUNK: usize = 256;
const RES_BOTTLENECK: usize = 64;
const RES_NECK: usize = 100;
const RES_HEAD_HIDDEN: usize = 32;

const MUL_BRANCH_HIDDEN: usize = 128;
const MUL_BRANCH_FEATURE: usize = 144;
const MUL_TRUNK: usize = 144;

/// `sum (n_in + 1) * n_out` over the residual baseline's eight layers.
pub(crate) fn mlp_res_param_count(multiplier: f64, input_dim: usize) -> usize {
    let t = scaled_width(RES_TRUNK, multiplier);
    let b = scaled_width(RES_BOTTLENECK, multiplier);
    let n = scaled_width(RES_NECK, multiplier);
    let h = scaled_width(RES_HEAD_HIDDEN, multiplier);
    let block = (t + 1) * b + (b + 1) * t;
    (input_dim + 1) * t + 2 * block + (t + 1) * n + (n + 1) * h + (h + 1)
}

/// `sum (n_in + 1) * n_out` over the multi-branch baseline's six layers.
pub(crate) fn mlp_mul_param_count(multiplier: f64, input_dim: usize) -> usize {
    let bh = scaled_width(MUL_BRANCH_HIDDEN, multiplier);
    let bf = scaled_width(MUL_BRANCH_FEATURE, multiplier);
    let t = scaled_width(MUL_TRUNK, multiplier);
    let branch = (input_dim + 1) * bh + (bh + 1) * bf;
    2 * branch + (2 * bf + 1) * t + (t + 1)
}

/// Bottleneck residual block `x -> ReLU(x + expand(ReLU(compress(x))))`.
#[derive(Debug, Clone)]
pub struct ResBlock {
    pub compress: DenseLayer,
    pub expand: DenseLayer,
}

impl ResBlock {
    fn new<R: Rng>(trunk: usize, bottleneck: usize, rng: &mut R) -> ResBlock {
        ResBlock {
            compress: DenseLayer::init_he(trunk, bottleneck, rng),
            expand: DenseLayer::init_he(bottleneck, trunk, rng),
        }
    }

    fn forward(&self, tape: &mut Tape, x: NodeId) -> Result<NodeId> {
        let h = self.compress.forward(tape, x)?;
        let h = tape.relu(h);
        let h = self.expand.forward(tape, h)?;
        let s = tape.add(x, h)?;
        Ok(tape.relu(s))
    }
}

/// Eight-layer residual MLP baseline.
#[derive(Debug, Clone)]
pub struct MlpRes {
    width_multiplier: f64,
    input_dim: usize,
    pub input: DenseLayer,
    pub block1: ResBlock,
    pub block2: ResBlock,
    pub neck: DenseLayer,
    pub pre_head: DenseLayer,
    pub head: DenseLayer,
}

impl MlpRes {
    pub fn new<R: Rng>(multiplier: f64, input_dim: usize, rng: &mut R) -> MlpRes {
        let t = scaled_width(RES_TRUNK, multiplier);
        let b = scaled_width(RES_BOTTLENECK, multiplier);
        let n = scaled_width(RES_NECK, multiplier);
        let h = scaled_width(RES_HEAD_HIDDEN, multiplier);
        MlpRes {
            width_multiplier: multiplier,
            input_dim,
            input: DenseLayer::init_he(input_dim, t, rng),
            block1: ResBlock::new(t, b, rng),
            block2: ResBlock::new(t, b, rng),
            neck: DenseLayer::init_he(t, n, rng),
            pre_head: DenseLayer::init_he(n, h, rng),
            head: DenseLayer::init_he(h, 1, rng),
        }
    }
}

impl Model for MlpRes {
    fn kind(&self) -> ModelKind {
        ModelKind::MlpRes
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec::new(ModelKind::MlpRes).with_width_multiplier(self.width_multiplier)
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn forward(&self, tape: &mut Tape, input: NodeId) -> Result<NodeId> {
        let h = self.input.forward(tape, input)?;
        let h = tape.relu(h);
        let h = self.block1.forward(tape, h)?;
        let h = self.block2.forward(tape, h)?;
        let h = self.neck.forward(tape, h)?;
        let h = tape.relu(h);
        let h = self.pre_head.forward(tape, h)?;
        let h = tape.relu(h);
        self.head.forward(tape, h)
    }

    fn for_each_param(&self, f: &mut dyn FnMut(&Tensor)) {
        for layer in [
            &self.input,
            &self.block1.compress,
            &self.block1.expand,
            &self.block2.compress,
            &self.block2.expand,
            &self.neck,
            &self.pre_head,
            &self.head,
        ] {
            f(&layer.weights);
            f(&layer.bias);
        }
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Tensor)) {
        for layer in [
            &mut self.input,
            &mut self.block1.compress,
            &mut self.block1.expand,
            &mut self.block2.compress,
            &mut self.block2.expand,
            &mut self.neck,
            &mut self.pre_head,
            &mut self.head,
        ] {
            f(&mut layer.weights);
            f(&mut layer.bias);
        }
    }
}

/// Six-layer multi-branch MLP baseline: two parallel encoders over the same
/// flat input, concatenated into a single trunk.
#[derive(Debug, Clone)]
pub struct MlpMul {
    width_multiplier: f64,
    input_dim: usize,
    pub a1: DenseLayer,
    pub a2: DenseLayer,
    pub b1: DenseLayer,
    pub b2: DenseLayer,
    pub trunk: DenseLayer,
    pub head: DenseLayer,
}

impl MlpMul {
    pub fn new<R: Rng>(multiplier: f64, input_dim: usize, rng: &mut R) -> MlpMul {
        let bh = scaled_width(MUL_BRANCH_HIDDEN, multiplier);
        let bf = scaled_width(MUL_BRANCH_FEATURE, multiplier);
        let t = scaled_width(MUL_TRUNK, multiplier);
        MlpMul {
            width_multiplier: multiplier,
            input_dim,
            a1: DenseLayer::init_he(input_dim, bh, rng),
            a2: DenseLayer::init_he(bh, bf, rng),
            b1: DenseLayer::init_he(input_dim, bh, rng),
            b2: DenseLayer::init_he(bh, bf, rng),
            trunk: DenseLayer::init_he(2 * bf, t, rng),
            head: DenseLayer::init_he(t, 1, rng),
        }
    }

    fn branch(
        tape: &mut Tape,
        l1: &DenseLayer,
        l2: &DenseLayer,
        x: NodeId,
    ) -> Result<NodeId> {
        let h = l1.forward(tape, x)?;
        let h = tape.relu(h);
        let h = l2.forward(tape, h)?;
        Ok(tape.relu(h))
    }
}

impl Model for MlpMul {
    fn kind(&self) -> ModelKind {
        ModelKind::MlpMul
    }

    fn spec(&self) -> ModelSpec {
        ModelSpec::new(ModelKind::MlpMul).with_width_multiplier(self.width_multiplier)
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn forward(&self, tape: &mut Tape, input: NodeId) -> Result<NodeId> {
        let fa = MlpMul::branch(tape, &self.a1, &self.a2, input)?;
        let fb = MlpMul::branch(tape, &self.b1, &self.b2, input)?;
        let cat = tape.concat_cols(fa, fb)?;
        let h = self.trunk.forward(tape, cat)?;
        let h = tape.relu(h);
        self.head.forward(tape, h)
    }

    fn for_each_param(&self, f: &mut dyn FnMut(&Tensor)) {
        for layer in [&self.a1, &self.a2, &self.b1, &self.b2, &self.trunk, &self.head] {
            f(&layer.weights);
            f(&layer.bias);
        }
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Tensor)) {
        for layer in [
            &mut self.a1,
            &mut self.a2,
            &mut self.b1,
            &mut self.b2,
            &mut self.trunk,
            &mut self.head,
        ] {
            f(&mut layer.weights);
            f(&mut layer.bias);
        }
    }
}
