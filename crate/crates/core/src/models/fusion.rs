//! The four feature-fusion modules that splice stage features together.
//!
//! Each module combines the running fused feature `e` (driven by the
//! overall working-condition branch) with the next stage's feature `z`,
//! both of width `F` (128 at multiplier 1):
//!
//! * **FCF** — plain concatenation through one wide layer:
//!   `ReLU(FC^F([e, z]))`.
//! * **BNF** — the same concatenation squeezed through a bottleneck:
//!   `ReLU(FC^F(ReLU(FC^B([e, z]))))` with `B = 32` at multiplier 1.
//! * **ABF** — scaled dot-product attention where `e` queries both
//!   features through shared key/value projections of width `A = 16`;
//!   softmax over the two scores uses temperature 10, and the attended
//!   value re-enters through a residual: `ReLU(e + FC^F(e_att))`.
//! * **CAWF** — two separate importance networks (`FC^F(ReLU(FC^B(.)))`,
//!   no outer activation) score `e` and `z` per channel; a per-channel
//!   two-way softmax at temperature 1 turns the scores into convex blend
//!   weights: `w1 .* e + w2 .* z` with `w1 + w2 = 1`.

use rand::Rng;

use crate::error::Result;
use crate::fmath;
use crate::nn::DenseLayer;
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

use super::scaled_width;

/// Softmax temperature of the attention-based module.
pub const ABF_TEMPERATURE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionKind {
    Fcf,
    Bnf,
    Abf,
    Cawf,
}

impl FusionKind {
    pub const ALL: [FusionKind; 4] = [
        FusionKind::Fcf,
        FusionKind::Bnf,
        FusionKind::Abf,
        FusionKind::Cawf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FusionKind::Fcf => "FCF",
            FusionKind::Bnf => "BNF",
            FusionKind::Abf => "ABF",
            FusionKind::Cawf => "CAWF",
        }
    }
}

/// Layer widths of one fusion module after width scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusionDims {
    /// Stage feature width `F` (both inputs and the output).
    pub feature: usize,
    /// Bottleneck width `B` used by BNF and the CAWF importance networks.
    pub bottleneck: usize,
    /// Query/key/value projection width `A` used by ABF.
    pub attention: usize,
}

impl FusionDims {
    /// Base widths `F = 128`, `B = 32`, `A = 16` scaled by `multiplier`.
    pub fn scaled(multiplier: f64) -> FusionDims {
        FusionDims {
            feature: scaled_width(128, multiplier),
            bottleneck: scaled_width(32, multiplier),
            attention: scaled_width(16, multiplier),
        }
    }

    /// Parameters of one module of the given kind at these widths.
    pub fn param_count(&self, kind: FusionKind) -> usize {
        let (f, b, a) = (self.feature, self.bottleneck, self.attention);
        match kind {
            FusionKind::Fcf => (2 * f + 1) * f,
            FusionKind::Bnf => (2 * f + 1) * b + (b + 1) * f,
            FusionKind::Abf => 3 * (f + 1) * a + (a + 1) * f,
            // Two independent importance networks.
            FusionKind::Cawf => 2 * ((f + 1) * b + (b + 1) * f),
        }
    }
}

/// Concatenation fusion: one wide layer over `[e, z]`.
#[derive(Debug, Clone)]
pub struct FcfFusion {
    pub fc: DenseLayer,
}

impl FcfFusion {
    pub fn new<R: Rng>(dims: &FusionDims, rng: &mut R) -> FcfFusion {
        FcfFusion {
            fc: DenseLayer::init_he(2 * dims.feature, dims.feature, rng),
        }
    }

    pub fn forward(&self, tape: &mut Tape, e: NodeId, z: NodeId) -> Result<NodeId> {
        let cat = tape.concat_cols(e, z)?;
        let h = self.fc.forward(tape, cat)?;
        Ok(tape.relu(h))
    }
}

/// Bottleneck fusion: compress the concatenation, re-expand, activate.
#[derive(Debug, Clone)]
pub struct BnfFusion {
    pub compress: DenseLayer,
    pub expand: DenseLayer,
}

impl BnfFusion {
    pub fn new<R: Rng>(dims: &FusionDims, rng: &mut R) -> BnfFusion {
        BnfFusion {
            compress: DenseLayer::init_he(2 * dims.feature, dims.bottleneck, rng),
            expand: DenseLayer::init_he(dims.bottleneck, dims.feature, rng),
        }
    }

    pub fn forward(&self, tape: &mut Tape, e: NodeId, z: NodeId) -> Result<NodeId> {
        let cat = tape.concat_cols(e, z)?;
        let h = self.compress.forward(tape, cat)?;
        let h = tape.relu(h);
        let h = self.expand.forward(tape, h)?;
        Ok(tape.relu(h))
    }
}

/// Attention fusion trace, exposing the internals interpretability work
/// and the invariant tests want to see.
#[derive(Debug, Clone, Copy)]
pub struct AbfTrace {
    /// `[n, 2]` softmax weights over (e, z).
    pub weights: NodeId,
    /// `[n, F]` attended value `w1 v1 + w2 v2`.
    pub attended: NodeId,
    /// `[n, F]` module output.
    pub output: NodeId,
}

/// Attention-based fusion with shared key/value projections.
#[derive(Debug, Clone)]
pub struct AbfFusion {
    pub query: DenseLayer,
    pub key: DenseLayer,
    pub value: DenseLayer,
    pub lift: DenseLayer,
}

impl AbfFusion {
    pub fn new<R: Rng>(dims: &FusionDims, rng: &mut R) -> AbfFusion {
        let (f, a) = (dims.feature, dims.attention);
        AbfFusion {
            query: DenseLayer::init_he(f, a, rng),
            key: DenseLayer::init_he(f, a, rng),
            value: DenseLayer::init_he(f, a, rng),
            lift: DenseLayer::init_he(a, f, rng),
        }
    }

    pub fn forward_trace(&self, tape: &mut Tape, e: NodeId, z: NodeId) -> Result<AbfTrace> {
        // Key and value layers are bound once and applied to both features;
        // the parameters must not be registered twice.
        let query = self.query.bind(tape);
        let key = self.key.bind(tape);
        let value = self.value.bind(tape);
        let lift = self.lift.bind(tape);

        let q = query.apply(tape, e)?;
        let k1 = key.apply(tape, e)?;
        let k2 = key.apply(tape, z)?;
        let v1 = value.apply(tape, e)?;
        let v2 = value.apply(tape, z)?;

        let inv_sqrt_d = 1.0 / fmath::sqrt(self.query.out_dim() as f64);
        let s1 = tape.row_dot(q, k1)?;
        let s1 = tape.scale(s1, inv_sqrt_d);
        let s2 = tape.row_dot(q, k2)?;
        let s2 = tape.scale(s2, inv_sqrt_d);

        let scores = tape.concat_cols(s1, s2)?;
        let weights = tape.softmax_rows(scores, ABF_TEMPERATURE)?;
        let w1 = tape.slice_cols(weights, 0, 1)?;
        let w2 = tape.slice_cols(weights, 1, 1)?;

        let wv1 = tape.col_mul(w1, v1)?;
        let wv2 = tape.col_mul(w2, v2)?;
        let attended = tape.add(wv1, wv2)?;

        let lifted = lift.apply(tape, attended)?;
        let residual = tape.add(e, lifted)?;
        let output = tape.relu(residual);
        Ok(AbfTrace {
            weights,
            attended,
            output,
        })
    }
}

/// Channel-wise fusion trace.
#[derive(Debug, Clone, Copy)]
pub struct CawfTrace {
    /// `[n, F]` per-channel weight on the running feature `e`.
    pub main_weight: NodeId,
    /// `[n, F]` per-channel weight on the stage feature `z` (`1 - main`).
    pub supp_weight: NodeId,
    pub output: NodeId,
}

/// One CAWF importance network: `FC^F(ReLU(FC^B(x)))`, no outer activation
/// so the scores can take both signs.
#[derive(Debug, Clone)]
pub struct ImportanceNet {
    pub compress: DenseLayer,
    pub expand: DenseLayer,
}

impl ImportanceNet {
    fn new<R: Rng>(dims: &FusionDims, rng: &mut R) -> ImportanceNet {
        ImportanceNet {
            compress: DenseLayer::init_he(dims.feature, dims.bottleneck, rng),
            expand: DenseLayer::init_he(dims.bottleneck, dims.feature, rng),
        }
    }

    fn forward(&self, tape: &mut Tape, x: NodeId) -> Result<NodeId> {
        let h = self.compress.forward(tape, x)?;
        let h = tape.relu(h);
        self.expand.forward(tape, h)
    }
}

/// Channel-attention weighted fusion: a per-channel convex blend of the two
/// features, weighted by learned importance scores.
#[derive(Debug, Clone)]
pub struct CawfFusion {
    pub main_importance: ImportanceNet,
    pub supp_importance: ImportanceNet,
}

impl CawfFusion {
    pub fn new<R: Rng>(dims: &FusionDims, rng: &mut R) -> CawfFusion {
        CawfFusion {
            main_importance: ImportanceNet::new(dims, rng),
            supp_importance: ImportanceNet::new(dims, rng),
        }
    }

    pub fn forward_trace(&self, tape: &mut Tape, e: NodeId, z: NodeId) -> Result<CawfTrace> {
        let score_e = self.main_importance.forward(tape, e)?;
        let score_z = self.supp_importance.forward(tape, z)?;
        // Two-way softmax per channel at temperature 1, computed as the
        // logistic of the score difference: softmax([a, b])_1 is exactly
        // 1 / (1 + exp(b - a)) = sigmoid(a - b), and the complement weight
        // 1 - w1 makes the pair sum to one identically.
        let diff = tape.sub(score_e, score_z)?;
        let main_weight = tape.sigmoid(diff);
        let supp_weight = tape.one_minus(main_weight);
        let we = tape.mul(main_weight, e)?;
        let wz = tape.mul(supp_weight, z)?;
        let output = tape.add(we, wz)?;
        Ok(CawfTrace {
            main_weight,
            supp_weight,
            output,
        })
    }
}

/// A fusion module of any kind, sized by [`FusionDims`].
#[derive(Debug, Clone)]
pub enum Fusion {
    Fcf(FcfFusion),
    Bnf(BnfFusion),
    Abf(AbfFusion),
    Cawf(CawfFusion),
}

impl Fusion {
    pub fn new<R: Rng>(kind: FusionKind, dims: &FusionDims, rng: &mut R) -> Fusion {
        match kind {
            FusionKind::Fcf => Fusion::Fcf(FcfFusion::new(dims, rng)),
            FusionKind::Bnf => Fusion::Bnf(BnfFusion::new(dims, rng)),
            FusionKind::Abf => Fusion::Abf(AbfFusion::new(dims, rng)),
            FusionKind::Cawf => Fusion::Cawf(CawfFusion::new(dims, rng)),
        }
    }

    pub fn kind(&self) -> FusionKind {
        match self {
            Fusion::Fcf(_) => FusionKind::Fcf,
            Fusion::Bnf(_) => FusionKind::Bnf,
            Fusion::Abf(_) => FusionKind::Abf,
            Fusion::Cawf(_) => FusionKind::Cawf,
        }
    }

    /// Fuse the running feature `e` with the stage feature `z`.
    pub fn forward(&self, tape: &mut Tape, e: NodeId, z: NodeId) -> Result<NodeId> {
        match self {
            Fusion::Fcf(f) => f.forward(tape, e, z),
            Fusion::Bnf(f) => f.forward(tape, e, z),
            Fusion::Abf(f) => Ok(f.forward_trace(tape, e, z)?.output),
            Fusion::Cawf(f) => Ok(f.forward_trace(tape, e, z)?.output),
        }
    }

    pub fn for_each_param(&self, f: &mut dyn FnMut(&Tensor)) {
        match self {
            Fusion::Fcf(m) => {
                f(&m.fc.weights);
                f(&m.fc.bias);
            }
            Fusion::Bnf(m) => {
                f(&m.compress.weights);
                f(&m.compress.bias);
                f(&m.expand.weights);
                f(&m.expand.bias);
            }
            Fusion::Abf(m) => {
                for layer in [&m.query, &m.key, &m.value, &m.lift] {
                    f(&layer.weights);
                    f(&layer.bias);
                }
            }
            Fusion::Cawf(m) => {
                for net in [&m.main_importance, &m.supp_importance] {
                    f(&net.compress.weights);
                    f(&net.compress.bias);
                    f(&net.expand.weights);
                    f(&net.expand.bias);
                }
            }
        }
    }

    pub fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&mut Tensor)) {
        match self {
            Fusion::Fcf(m) => {
                f(&mut m.fc.weights);
                f(&mut m.fc.bias);
            }
            Fusion::Bnf(m) => {
                f(&mut m.compress.weights);
                f(&mut m.compress.bias);
                f(&mut m.expand.weights);
                f(&mut m.expand.bias);
            }
            Fusion::Abf(m) => {
                for layer in [&mut m.query, &mut m.key, &mut m.value, &mut m.lift] {
                    f(&mut layer.weights);
                    f(&mut layer.bias);
                }
            }
            Fusion::Cawf(m) => {
                for net in [&mut m.main_importance, &mut m.supp_importance] {
                    f(&mut net.compress.weights);
                    f(&mut net.compress.bias);
                    f(&mut net.expand.weights);
                    f(&mut net.expand.bias);
                }
            }
        }
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.for_each_param(&mut |p| n += p.len());
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_feature<R: Rng>(n: usize, rng: &mut R) -> Tensor {
        Tensor::vector((0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
    }

    #[test]
    fn module_param_counts_at_full_width() {
        // One module each at F=128, B=32, A=16.
        let dims = FusionDims::scaled(1.0);
        assert_eq!(dims.param_count(FusionKind::Fcf), 32_896);
        assert_eq!(dims.param_count(FusionKind::Bnf), 12_448);
        assert_eq!(dims.param_count(FusionKind::Abf), 8_368);
        assert_eq!(dims.param_count(FusionKind::Cawf), 16_704);
    }

    #[test]
    fn built_modules_match_the_formula_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in FusionKind::ALL {
            for m in [0.25, 1.0, 2.0] {
                let dims = FusionDims::scaled(m);
                let fusion = Fusion::new(kind, &dims, &mut rng);
                assert_eq!(
                    fusion.param_count(),
                    dims.param_count(kind),
                    "{} x{m}",
                    kind.name()
                );
            }
        }
    }

    #[test]
    fn fcf_matches_manual_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dims = FusionDims::scaled(0.25);
        let fcf = FcfFusion::new(&dims, &mut rng);
        let e = random_feature(dims.feature, &mut rng);
        let z = random_feature(dims.feature, &mut rng);

        let mut tape = Tape::new();
        let ei = tape.input(e.clone());
        let zi = tape.input(z.clone());
        let out = fcf.forward(&mut tape, ei, zi).unwrap();

        // Manual: concatenate, one dense layer, ReLU.
        let mut cat = e.as_slice().to_vec();
        cat.extend_from_slice(z.as_slice());
        let mut manual = Tape::new();
        let ci = manual.input(Tensor::vector(cat));
        let h = fcf.fc.forward(&mut manual, ci).unwrap();
        let h = manual.relu(h);

        assert_eq!(tape.value(out).as_slice(), manual.value(h).as_slice());
    }

    #[test]
    fn bnf_bottleneck_is_quarter_of_feature_width() {
        let dims = FusionDims::scaled(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bnf = BnfFusion::new(&dims, &mut rng);
        assert_eq!(bnf.compress.in_dim(), 256);
        assert_eq!(bnf.compress.out_dim(), 32);
        assert_eq!(bnf.expand.out_dim(), 128);
    }

    #[test]
    fn fcf_and_bnf_outputs_are_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dims = FusionDims::scaled(0.5);
        let fcf = FcfFusion::new(&dims, &mut rng);
        let bnf = BnfFusion::new(&dims, &mut rng);
        for _ in 0..50 {
            let e = random_feature(dims.feature, &mut rng);
            let z = random_feature(dims.feature, &mut rng);
            let mut tape = Tape::new();
            let ei = tape.input(e);
            let zi = tape.input(z);
            let a = fcf.forward(&mut tape, ei, zi).unwrap();
            let b = bnf.forward(&mut tape, ei, zi).unwrap();
            for &v in tape.value(a).as_slice().iter().chain(tape.value(b).as_slice()) {
                assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn abf_weights_are_a_two_way_softmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let dims = FusionDims::scaled(1.0);
        let abf = AbfFusion::new(&dims, &mut rng);
        for _ in 0..20 {
            let e = random_feature(dims.feature, &mut rng);
            let z = random_feature(dims.feature, &mut rng);
            let mut tape = Tape::new();
            let ei = tape.input(e);
            let zi = tape.input(z);
            let trace = abf.forward_trace(&mut tape, ei, zi).unwrap();
            let w = tape.value(trace.weights).as_slice();
            assert_eq!(w.len(), 2);
            assert!(w[0] > 0.0 && w[1] > 0.0);
            assert!((w[0] + w[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn abf_identical_inputs_attend_to_the_shared_value() {
        // With e = z the two keys and values coincide, the weights are both
        // one half, and the attended feature equals the shared value vector.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dims = FusionDims::scaled(1.0);
        let abf = AbfFusion::new(&dims, &mut rng);
        let e = random_feature(dims.feature, &mut rng);

        let mut tape = Tape::new();
        let ei = tape.input(e.clone());
        let zi = tape.input(e.clone());
        let trace = abf.forward_trace(&mut tape, ei, zi).unwrap();

        let w = tape.value(trace.weights).as_slice();
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);

        let mut manual = Tape::new();
        let ev = manual.input(e);
        let v = abf.value.forward(&mut manual, ev).unwrap();
        for (a, b) in tape
            .value(trace.attended)
            .as_slice()
            .iter()
            .zip(manual.value(v).as_slice())
        {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn abf_binds_shared_projections_once() {
        // query, key, value, lift: four layers, eight parameter tensors,
        // even though key and value are each applied twice.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dims = FusionDims::scaled(0.25);
        let abf = AbfFusion::new(&dims, &mut rng);
        let mut tape = Tape::new();
        let e = tape.input(random_feature(dims.feature, &mut rng));
        let z = tape.input(random_feature(dims.feature, &mut rng));
        abf.forward_trace(&mut tape, e, z).unwrap();
        assert_eq!(tape.params().len(), 8);
    }

    #[test]
    fn cawf_weights_are_convex_per_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dims = FusionDims::scaled(1.0);
        let cawf = CawfFusion::new(&dims, &mut rng);
        for _ in 0..20 {
            let e = random_feature(dims.feature, &mut rng);
            let z = random_feature(dims.feature, &mut rng);
            let mut tape = Tape::new();
            let ei = tape.input(e.clone());
            let zi = tape.input(z.clone());
            let trace = cawf.forward_trace(&mut tape, ei, zi).unwrap();

            let w1 = tape.value(trace.main_weight).as_slice();
            let w2 = tape.value(trace.supp_weight).as_slice();
            let out = tape.value(trace.output).as_slice();
            for c in 0..dims.feature {
                assert!(w1[c] > 0.0 && w1[c] < 1.0);
                assert!((w1[c] + w2[c] - 1.0).abs() < 1e-12);
                let blend = w1[c] * e.as_slice()[c] + w2[c] * z.as_slice()[c];
                assert!((out[c] - blend).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cawf_identical_importance_nets_weight_half_each() {
        // Force both importance networks to share parameters: scores match,
        // so every channel weight is exactly one half and the output is the
        // midpoint of the two features.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let dims = FusionDims::scaled(0.5);
        let mut cawf = CawfFusion::new(&dims, &mut rng);
        cawf.supp_importance = cawf.main_importance.clone();

        let e = random_feature(dims.feature, &mut rng);
        let mut tape = Tape::new();
        let ei = tape.input(e.clone());
        let zi = tape.input(e.clone());
        let trace = cawf.forward_trace(&mut tape, ei, zi).unwrap();
        for (w, (o, x)) in tape
            .value(trace.main_weight)
            .as_slice()
            .iter()
            .zip(tape.value(trace.output).as_slice().iter().zip(e.as_slice()))
        {
            assert!((w - 0.5).abs() < 1e-12);
            assert!((o - x).abs() < 1e-12);
        }
    }

    #[test]
    fn fusion_enum_dispatch_matches_inner_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dims = FusionDims::scaled(0.25);
        for kind in FusionKind::ALL {
            let fusion = Fusion::new(kind, &dims, &mut rng);
            assert_eq!(fusion.kind(), kind);
            let e = random_feature(dims.feature, &mut rng);
            let z = random_feature(dims.feature, &mut rng);
            let mut tape = Tape::new();
            let ei = tape.input(e);
            let zi = tape.input(z);
            let out = fusion.forward(&mut tape, ei, zi).unwrap();
            assert_eq!(tape.value(out).cols(), dims.feature);
            assert!(tape.value(out).all_finite());
        }
    }

    #[test]
    fn fusion_modules_with_same_seed_share_no_parameters_across_instances() {
        // Three modules built from one stream must all differ: the chain
        // shares structure, never weights.
        let dims = FusionDims::scaled(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = Fusion::new(FusionKind::Bnf, &dims, &mut rng);
        let b = Fusion::new(FusionKind::Bnf, &dims, &mut rng);
        let mut pa = Vec::new();
        a.for_each_param(&mut |p| pa.push(p.clone()));
        let mut pb = Vec::new();
        b.for_each_param(&mut |p| pb.push(p.clone()));
        assert_eq!(pa.len(), pb.len());
        assert_ne!(pa, pb);
    }

    #[test]
    fn batched_and_single_row_fusion_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let dims = FusionDims::scaled(0.5);
        let fusion = Fusion::new(FusionKind::Abf, &dims, &mut rng);
        let e0 = random_feature(dims.feature, &mut rng);
        let e1 = random_feature(dims.feature, &mut rng);
        let z0 = random_feature(dims.feature, &mut rng);
        let z1 = random_feature(dims.feature, &mut rng);

        let mut batch = Tape::new();
        let eb = batch.input(Tensor::from_rows(&[e0.as_slice().to_vec(), e1.as_slice().to_vec()]).unwrap());
        let zb = batch.input(Tensor::from_rows(&[z0.as_slice().to_vec(), z1.as_slice().to_vec()]).unwrap());
        let ob = fusion.forward(&mut batch, eb, zb).unwrap();

        for (row, (e, z)) in [(e0, z0), (e1, z1)].into_iter().enumerate() {
            let mut single = Tape::new();
            let ei = single.input(e);
            let zi = single.input(z);
            let os = fusion.forward(&mut single, ei, zi).unwrap();
            assert_eq!(batch.value(ob).row(row), single.value(os).as_slice());
        }
    }
}
