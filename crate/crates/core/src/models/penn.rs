//! The physical-embedded network: per-component sub-networks whose features
//! are fused in engine-station order.
//!
//! The 18 inputs are partitioned into the overall working-condition group
//! (altitude/Mach-level quantities), the intake group, the core group
//! (low- and high-speed spool readings) and the exhaust group. Each group
//! passes through its own two-layer encoder; the overall branch drives a
//! chain of three structurally identical fusion modules that successively
//! absorb the intake, core and exhaust features, mirroring the physical
//! flow path. A small regression head turns the fused feature into the
//! scalar prediction. The three fusion modules never share parameters.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::DenseLayer;
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

use super::fusion::{Fusion, FusionDims, FusionKind};
use super::{scaled_width, InputDims, Model, ModelKind, ModelSpec};

/// Two-layer group encoder: `ReLU(FC^F(ReLU(FC^H(x))))` with `H = 32` and
/// `F = 128` at multiplier 1.
#[derive(Debug, Clone)]
pub struct SubNetwork {
    pub fc1: DenseLayer,
    pub fc2: DenseLayer,
}

impl SubNetwork {
    pub fn new<R: Rng>(input_dim: usize, hidden: usize, feature: usize, rng: &mut R) -> SubNetwork {
        SubNetwork {
            fc1: DenseLayer::init_he(input_dim, hidden, rng),
            fc2: DenseLayer::init_he(hidden, feature, rng),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: NodeId) -> Result<NodeId> {
        let h = self.fc1.forward(tape, x)?;
        let h = tape.relu(h);
        let h = self.fc2.forward(tape, h)?;
        Ok(tape.relu(h))
    }

    pub fn param_count(&self) -> usize {
        self.fc1.param_count() + self.fc2.param_count()
    }
}

/// Hidden widths of the PENN body after scaling.
#[derive(Debug, Clone, Copy)]
struct PennDims {
    sub_hidden: usize,
    feature: usize,
    head_hidden: usize,
    fusion: FusionDims,
}

impl PennDims {
    fn scaled(multiplier: f64) -> PennDims {
        PennDims {
            sub_hidden: scaled_width(32, multiplier),
            feature: scaled_width(128, multiplier),
            head_hidden: scaled_width(32, multiplier),
            fusion: FusionDims::scaled(multiplier),
        }
    }
}

/// Exact parameter count of a PENN variant, layer by layer.
pub(crate) fn penn_param_count(kind: FusionKind, multiplier: f64, input: InputDims) -> usize {
    let d = PennDims::scaled(multiplier);
    let sub = |in_dim: usize| (in_dim + 1) * d.sub_hidden + (d.sub_hidden + 1) * d.feature;
    let subs = sub(input.overall) + sub(input.intake) + sub(input.core) + sub(input.exhaust);
    let fusions = 3 * d.fusion.param_count(kind);
    let head = (d.feature + 1) * d.head_hidden + (d.head_hidden + 1);
    subs + fusions + head
}

/// The assembled physical-embedded network.
#[derive(Debug, Clone)]
pub struct PennModel {
    spec: ModelSpec,
    pub overall: SubNetwork,
    pub intake: SubNetwork,
    pub core: SubNetwork,
    pub exhaust: SubNetwork,
    /// Fusion chain in station order: intake, core, exhaust.
    pub fusions: [Fusion; 3],
    pub head_hidden: DenseLayer,
    pub head_out: DenseLayer,
}

impl PennModel {
    /// Build with He-initialized weights drawn from `rng` in declaration
    /// order. Fails on a non-PENN spec.
    pub fn new<R: Rng>(spec: ModelSpec, rng: &mut R) -> Result<PennModel> {
        let fusion_kind = spec.kind.fusion_kind().ok_or(Error::InvalidParameter {
            what: "PENN model kind",
            value: 0.0,
        })?;
        let d = PennDims::scaled(spec.width_multiplier);
        let input = spec.input_dims;
        Ok(PennModel {
            spec,
            overall: SubNetwork::new(input.overall, d.sub_hidden, d.feature, rng),
            intake: SubNetwork::new(input.intake, d.sub_hidden, d.feature, rng),
            core: SubNetwork::new(input.core, d.sub_hidden, d.feature, rng),
            exhaust: SubNetwork::new(input.exhaust, d.sub_hidden, d.feature, rng),
            fusions: [
                Fusion::new(fusion_kind, &d.fusion, rng),
                Fusion::new(fusion_kind, &d.fusion, rng),
                Fusion::new(fusion_kind, &d.fusion, rng),
            ],
            head_hidden: DenseLayer::init_he(d.feature, d.head_hidden, rng),
            head_out: DenseLayer::init_he(d.head_hidden, 1, rng),
        })
    }

    pub fn fusion_kind(&self) -> FusionKind {
        self.fusions[0].kind()
    }

    /// The fused feature right before the regression head; exposed so the
    /// head can be studied (and tested) in isolation.
    pub fn fused_feature(&self, tape: &mut Tape, input: NodeId) -> Result<NodeId> {
        let groups = self.spec.input_dims.partition_node(tape, input)?;
        let e_drive = self.overall.forward(tape, groups[0])?;
        let z_intake = self.intake.forward(tape, groups[1])?;
        let z_core = self.core.forward(tape, groups[2])?;
        let z_exhaust = self.exhaust.forward(tape, groups[3])?;

        let e1 = self.fusions[0].forward(tape, e_drive, z_intake)?;
        let e2 = self.fusions[1].forward(tape, e1, z_core)?;
        self.fusions[2].forward(tape, e2, z_exhaust)
    }

    /// Regression head on an already fused feature.
    pub fn head(&self, tape: &mut Tape, fused: NodeId) -> Result<NodeId> {
        let h = self.head_hidden.forward(tape, fused)?;
        let h = tape.relu(h);
        self.head_out.forward(tape, h)
    }
}

impl Model for PennModel {
    fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    fn spec(&self) -> ModelSpec {
        self.spec
    }

    fn forward(&self, tape: &mut Tape, input: NodeId) -> Result<NodeId> {
        let fused = self.fused_feature(tape, input)?;
        self.head(tape, fused)
    }

    fn for_each_param(&self, f: &mut dyn FnMut(&Tensor)) {
        for sub in [&self.overall, &self.intake, &self.core, &self.exhaust] {
            f(&sub.fc1.weights);
            f(&sub.fc1.bias);
            f(&sub.fc2.weights);
            f(&sub.fc2.bias);
        }
        for fusion in &self.fusions {
            fusion.for_each_param(f);
        }
        f(&self.head_hidden.weights);
        f(&self.head_hidden.bias);
        f(&self.head_out.weights);
        f(&self.head_out.bias);
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Tensor)) {
        for sub in [
            &mut self.overall,
            &mut self.intake,
            &mut self.core,
            &mut self.exhaust,
        ] {
            f(&mut sub.fc1.weights);
            f(&mut sub.fc1.bias);
            f(&mut sub.fc2.weights);
            f(&mut sub.fc2.bias);
        }
        for fusion in &mut self.fusions {
            fusion.for_each_param_mut(f);
        }
        f(&mut self.head_hidden.weights);
        f(&mut self.head_hidden.bias);
        f(&mut self.head_out.weights);
        f(&mut self.head_out.bias);
    }
}
