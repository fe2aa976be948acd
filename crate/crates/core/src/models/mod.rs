//! Model zoo: the physical-embedded networks and the MLP baselines.
//!
//! Everything is driven by a [`ModelSpec`] — kind, width multiplier and
//! input partition — which can report its exact parameter count without
//! allocating a network and can build an initialized instance from a seed.
//!
//! The crate-wide ordering contract lives here: a model binds its parameter
//! tensors to the tape in declaration order during `forward`, and
//! `for_each_param` / `for_each_param_mut` visit the same tensors in the
//! same order. Optimizer state, checkpoint layout and gradient extraction
//! all lean on that single ordering.

pub mod baseline;
pub mod fusion;
pub mod penn;

use alloc::boxed::Box;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fmath;
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

pub use baseline::{MlpMul, MlpRes};
pub use fusion::{Fusion, FusionDims, FusionKind};
pub use penn::{PennModel, SubNetwork};

/// A trainable regression network from 18 engine/flight features to one
/// performance quantity.
pub trait Model {
    fn kind(&self) -> ModelKind;

    fn spec(&self) -> ModelSpec;

    fn input_dim(&self) -> usize {
        self.spec().input_dims.total()
    }

    /// Record the forward pass on `tape`. `input` holds `[n, input_dim]`
    /// rows (or one rank-1 row); the result is the `[n, 1]` raw prediction.
    /// Parameters are bound in declaration order.
    fn forward(&self, tape: &mut Tape, input: NodeId) -> Result<NodeId>;

    /// Visit parameter tensors in declaration order.
    fn for_each_param(&self, f: &mut dyn FnMut(&Tensor));

    /// Mutable variant of [`Model::for_each_param`]; same order.
    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Tensor));

    /// Total scalar parameters, counting biases.
    fn param_count(&self) -> usize {
        let mut n = 0;
        self.for_each_param(&mut |p| n += p.len());
        n
    }
}

/// The six architectures covered by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    PennFcf,
    PennBnf,
    PennAbf,
    PennCawf,
    MlpRes,
    MlpMul,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::MlpRes,
        ModelKind::MlpMul,
        ModelKind::PennFcf,
        ModelKind::PennBnf,
        ModelKind::PennAbf,
        ModelKind::PennCawf,
    ];

    /// Identifier used by configs, checkpoints and the CLI.
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::PennFcf => "penn-fcf",
            ModelKind::PennBnf => "penn-bnf",
            ModelKind::PennAbf => "penn-abf",
            ModelKind::PennCawf => "penn-cawf",
            ModelKind::MlpRes => "mlp-res",
            ModelKind::MlpMul => "mlp-mul",
        }
    }

    /// Human-facing label used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::PennFcf => "PENN-FCF",
            ModelKind::PennBnf => "PENN-BNF",
            ModelKind::PennAbf => "PENN-ABF",
            ModelKind::PennCawf => "PENN-CAWF",
            ModelKind::MlpRes => "MLP-Res",
            ModelKind::MlpMul => "MLP-Mul",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        let lower = s.to_ascii_lowercase();
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == lower || k.display_name().to_ascii_lowercase() == lower)
    }

    /// The PENN variants share one body and differ only in fusion kind.
    pub fn fusion_kind(self) -> Option<FusionKind> {
        match self {
            ModelKind::PennFcf => Some(FusionKind::Fcf),
            ModelKind::PennBnf => Some(FusionKind::Bnf),
            ModelKind::PennAbf => Some(FusionKind::Abf),
            ModelKind::PennCawf => Some(FusionKind::Cawf),
            ModelKind::MlpRes | ModelKind::MlpMul => None,
        }
    }
}

/// Widths of the four physical input groups, in schema column order:
/// overall working conditions, intake, low-pressure core (low-speed spool
/// plus high-speed spool readings fused as one stage input), and exhaust.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputDims {
    pub overall: usize,
    pub intake: usize,
    pub core: usize,
    pub exhaust: usize,
}

impl Default for InputDims {
    fn default() -> InputDims {
        // 3 + 2 + 11 + 2 = 18 features.
        InputDims {
            overall: 3,
            intake: 2,
            core: 11,
            exhaust: 2,
        }
    }
}

impl InputDims {
    pub fn total(&self) -> usize {
        self.overall + self.intake + self.core + self.exhaust
    }

    /// Column ranges of the four groups within a schema-ordered row.
    pub fn ranges(&self) -> [core::ops::Range<usize>; 4] {
        let a = self.overall;
        let b = a + self.intake;
        let c = b + self.core;
        let d = c + self.exhaust;
        [0..a, a..b, b..c, c..d]
    }

    /// Split a schema-ordered tensor into the four group tensors.
    pub fn partition(&self, x: &Tensor) -> Result<[Tensor; 4]> {
        if x.cols() != self.total() {
            return Err(Error::InputLength {
                op: "partition_input",
                expected: self.total(),
                actual: x.cols(),
            });
        }
        let ranges = self.ranges();
        let mut out = [
            Tensor::zeros(x.shape().with_cols(ranges[0].len())),
            Tensor::zeros(x.shape().with_cols(ranges[1].len())),
            Tensor::zeros(x.shape().with_cols(ranges[2].len())),
            Tensor::zeros(x.shape().with_cols(ranges[3].len())),
        ];
        for (g, range) in ranges.into_iter().enumerate() {
            for r in 0..x.rows() {
                out[g]
                    .row_mut(r)
                    .copy_from_slice(&x.row(r)[range.clone()]);
            }
        }
        Ok(out)
    }

    /// Tape-level partition used inside model forward passes.
    pub fn partition_node(&self, tape: &mut Tape, x: NodeId) -> Result<[NodeId; 4]> {
        let cols = tape.value(x).cols();
        if cols != self.total() {
            return Err(Error::InputLength {
                op: "partition_input",
                expected: self.total(),
                actual: cols,
            });
        }
        let ranges = self.ranges();
        Ok([
            tape.slice_cols(x, ranges[0].start, ranges[0].len())?,
            tape.slice_cols(x, ranges[1].start, ranges[1].len())?,
            tape.slice_cols(x, ranges[2].start, ranges[2].len())?,
            tape.slice_cols(x, ranges[3].start, ranges[3].len())?,
        ])
    }
}

/// Scale a base width by the multiplier, rounding to the nearest unit and
/// never collapsing a layer below one feature.
pub(crate) fn scaled_width(base: usize, multiplier: f64) -> usize {
    let w = fmath::round(base as f64 * multiplier) as isize;
    w.max(1) as usize
}

/// Architecture description: everything needed to size, build or load a
/// network, independent of any parameter values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub width_multiplier: f64,
    pub input_dims: InputDims,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> ModelSpec {
        ModelSpec {
            kind,
            width_multiplier: 1.0,
            input_dims: InputDims::default(),
        }
    }

    pub fn with_width_multiplier(mut self, multiplier: f64) -> ModelSpec {
        self.width_multiplier = multiplier;
        self
    }

    pub fn with_input_dims(mut self, dims: InputDims) -> ModelSpec {
        self.input_dims = dims;
        self
    }

    /// Uniformly widen or narrow every hidden layer. A factor of 1 returns
    /// an identical spec.
    pub fn scaled(&self, factor: f64) -> ModelSpec {
        ModelSpec {
            width_multiplier: self.width_multiplier * factor,
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.width_multiplier > 0.0) || !self.width_multiplier.is_finite() {
            return Err(Error::InvalidParameter {
                what: "width multiplier",
                value: self.width_multiplier,
            });
        }
        Ok(())
    }

    /// Exact parameter count, computed layer-by-layer as
    /// `sum (n_in + 1) * n_out` without building the network. Guaranteed by
    /// test to equal the built model's tensor-length sum for every kind.
    pub fn param_count(&self) -> usize {
        let m = self.width_multiplier;
        let dims = self.input_dims;
        match self.kind {
            ModelKind::MlpRes => baseline::mlp_res_param_count(m, dims.total()),
            ModelKind::MlpMul => baseline::mlp_mul_param_count(m, dims.total()),
            _ => penn::penn_param_count(self.kind.fusion_kind().unwrap(), m, dims),
        }
    }

    /// Build the network with He-initialized weights drawn from a ChaCha8
    /// stream seeded with `seed`. Same spec + same seed gives bitwise
    /// identical parameters.
    pub fn build(&self, seed: u64) -> Result<Box<dyn Model>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(match self.kind {
            ModelKind::MlpRes => Box::new(MlpRes::new(
                self.width_multiplier,
                self.input_dims.total(),
                &mut rng,
            )),
            ModelKind::MlpMul => Box::new(MlpMul::new(
                self.width_multiplier,
                self.input_dims.total(),
                &mut rng,
            )),
            _ => Box::new(PennModel::new(*self, &mut rng)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn default_partition_matches_schema_groups() {
        let dims = InputDims::default();
        assert_eq!(dims.total(), 18);
        assert_eq!(dims.ranges(), [0..3, 3..5, 5..16, 16..18]);

        let x = Tensor::vector((0..18).map(|v| v as f64).collect());
        let parts = dims.partition(&x).unwrap();
        assert_eq!(parts[0].as_slice(), &[0.0, 1.0, 2.0]);
        assert_eq!(parts[1].as_slice(), &[3.0, 4.0]);
        assert_eq!(
            parts[2].as_slice(),
            &[5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0]
        );
        assert_eq!(parts[3].as_slice(), &[16.0, 17.0]);
    }

    #[test]
    fn partition_rejects_wrong_width() {
        let dims = InputDims::default();
        let x = Tensor::vector(vec![0.0; 17]);
        assert_eq!(
            dims.partition(&x).unwrap_err(),
            Error::InputLength {
                op: "partition_input",
                expected: 18,
                actual: 17
            }
        );
    }

    #[test]
    fn tape_partition_agrees_with_plain_partition() {
        let dims = InputDims::default();
        let data: Vec<f64> = (0..36).map(|v| v as f64 * 0.25 - 3.0).collect();
        let x = Tensor::matrix(2, 18, data).unwrap();
        let plain = dims.partition(&x).unwrap();

        let mut tape = Tape::new();
        let xi = tape.input(x);
        let nodes = dims.partition_node(&mut tape, xi).unwrap();
        for (p, n) in plain.iter().zip(nodes) {
            assert_eq!(p.as_slice(), tape.value(n).as_slice());
            assert_eq!(p.shape(), tape.value(n).shape());
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(ModelKind::parse(kind.name()), Some(kind));
            assert_eq!(ModelKind::parse(kind.display_name()), Some(kind));
        }
        assert_eq!(ModelKind::parse("resnet50"), None);
    }

    #[test]
    fn scaled_spec_multiplies_and_identity_holds() {
        let spec = ModelSpec::new(ModelKind::PennBnf);
        assert_eq!(spec.scaled(1.0), spec);
        let up = spec.scaled(4.0);
        assert_eq!(up.width_multiplier, 4.0);
        assert_eq!(up.kind, spec.kind);
    }

    #[test]
    fn build_rejects_degenerate_multiplier() {
        let spec = ModelSpec::new(ModelKind::PennBnf).with_width_multiplier(0.0);
        assert!(matches!(
            spec.build(1),
            Err(Error::InvalidParameter { what: "width multiplier", .. })
        ));
    }

    #[test]
    fn builds_are_seed_deterministic_for_every_kind() {
        for kind in ModelKind::ALL {
            let spec = ModelSpec::new(kind).with_width_multiplier(0.25);
            let a = spec.build(99).unwrap();
            let b = spec.build(99).unwrap();
            let c = spec.build(100).unwrap();
            let mut pa = Vec::new();
            a.for_each_param(&mut |p| pa.push(p.clone()));
            let mut pb = Vec::new();
            b.for_each_param(&mut |p| pb.push(p.clone()));
            let mut pc = Vec::new();
            c.for_each_param(&mut |p| pc.push(p.clone()));
            assert_eq!(pa, pb, "{} not deterministic", kind.name());
            assert_ne!(pa, pc, "{} ignoring seed", kind.name());
        }
    }

    #[test]
    fn spec_count_equals_built_tensor_sum_for_every_kind_and_width() {
        for kind in ModelKind::ALL {
            for m in [0.25, 0.5, 1.0, 2.0] {
                let spec = ModelSpec::new(kind).with_width_multiplier(m);
                let model = spec.build(3).unwrap();
                assert_eq!(
                    spec.param_count(),
                    model.param_count(),
                    "{} x{m}",
                    kind.name()
                );
            }
        }
    }

    #[test]
    fn forward_bind_order_matches_for_each_param_for_every_kind() {
        // The ordering contract: tape parameter leaves after a forward pass
        // carry exactly the tensors for_each_param yields, in order.
        for kind in ModelKind::ALL {
            let spec = ModelSpec::new(kind).with_width_multiplier(0.25);
            let model = spec.build(11).unwrap();
            let mut tape = Tape::new();
            let x = tape.input(Tensor::vector(vec![0.1; 18]));
            model.forward(&mut tape, x).unwrap();

            let mut declared: Vec<Tensor> = Vec::new();
            model.for_each_param(&mut |p| declared.push(p.clone()));
            let bound: Vec<&Tensor> = tape.params().iter().map(|&id| tape.value(id)).collect();
            assert_eq!(declared.len(), bound.len(), "{}", kind.name());
            for (d, b) in declared.iter().zip(bound) {
                assert_eq!(d, b, "{} bind order broken", kind.name());
            }
        }
    }
}
