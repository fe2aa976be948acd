//! Adam with bias correction and milestone learning-rate schedules.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath;
use crate::models::Model;
use crate::tensor::Tensor;

/// Adam hyper-parameters. The defaults are the standard
/// `beta1 = 0.9`, `beta2 = 0.999`, `epsilon = 1e-8`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> AdamConfig {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second-moment accumulators mirroring a model's parameter tensors.
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    /// Fresh zeroed state shaped after `model`'s parameters.
    pub fn for_model(model: &dyn Model, config: AdamConfig) -> AdamState {
        let mut m = Vec::new();
        model.for_each_param(&mut |p| m.push(Tensor::zeros(p.shape())));
        let v = m.clone();
        AdamState {
            config,
            m,
            v,
            step: 0,
        }
    }

    /// Number of updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update over every parameter tensor.
    ///
    /// `grads` must line up with the model's parameter declaration order —
    /// exactly what `Tape::params()` yields after a bound forward pass.
    /// A zero gradient leaves first moments decaying but the parameter is
    /// still nudged only by the accumulated momentum, so a fully zero
    /// history keeps the value untouched.
    pub fn step(&mut self, model: &mut dyn Model, grads: &[&Tensor], lr: f64) -> Result<()> {
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(Error::InvalidParameter {
                what: "learning rate",
                value: lr,
            });
        }
        if grads.len() != self.m.len() {
            return Err(Error::InputLength {
                op: "adam_step",
                expected: self.m.len(),
                actual: grads.len(),
            });
        }
        self.step += 1;
        let t = self.step as f64;
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let bias1 = 1.0 - fmath::pow(beta1, t);
        let bias2 = 1.0 - fmath::pow(beta2, t);

        let mut idx = 0usize;
        let mut status = Ok(());
        let (m_all, v_all) = (&mut self.m, &mut self.v);
        model.for_each_param_mut(&mut |param| {
            if status.is_err() {
                return;
            }
            let grad = grads[idx];
            if grad.shape() != param.shape() {
                status = Err(Error::DimensionMismatch {
                    op: "adam_step",
                    expected: param.shape(),
                    actual: grad.shape(),
                });
                return;
            }
            let m = &mut m_all[idx];
            let v = &mut v_all[idx];
            for (((p, &g), mv), vv) in param
                .as_mut_slice()
                .iter_mut()
                .zip(grad.as_slice())
                .zip(m.as_mut_slice())
                .zip(v.as_mut_slice())
            {
                *mv = beta1 * *mv + (1.0 - beta1) * g;
                *vv = beta2 * *vv + (1.0 - beta2) * g * g;
                let m_hat = *mv / bias1;
                let v_hat = *vv / bias2;
                *p -= lr * m_hat / (fmath::sqrt(v_hat) + epsilon);
            }
            idx += 1;
        });
        status
    }
}

/// Piecewise-constant decay: the rate is multiplied by `decay_factor` at
/// each milestone epoch, and the milestone epoch itself already runs at the
/// decayed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LrSchedule {
    initial_lr: f64,
    milestones: Vec<u32>,
    decay_factor: f64,
}

impl LrSchedule {
    pub fn new(initial_lr: f64, mut milestones: Vec<u32>, decay_factor: f64) -> Result<LrSchedule> {
        if !(initial_lr > 0.0) || !initial_lr.is_finite() {
            return Err(Error::InvalidParameter {
                what: "initial learning rate",
                value: initial_lr,
            });
        }
        if !(decay_factor > 0.0 && decay_factor < 1.0) {
            return Err(Error::InvalidParameter {
                what: "learning-rate decay factor",
                value: decay_factor,
            });
        }
        milestones.sort_unstable();
        milestones.dedup();
        Ok(LrSchedule {
            initial_lr,
            milestones,
            decay_factor,
        })
    }

    /// Constant learning rate (no milestones).
    pub fn constant(lr: f64) -> Result<LrSchedule> {
        LrSchedule::new(lr, Vec::new(), 0.5)
    }

    pub fn initial_lr(&self) -> f64 {
        self.initial_lr
    }

    pub fn milestones(&self) -> &[u32] {
        &self.milestones
    }

    pub fn decay_factor(&self) -> f64 {
        self.decay_factor
    }

    /// Rate used for `epoch` (0-based): `initial * factor^k` where `k`
    /// counts milestones `<= epoch`.
    pub fn lr_at_epoch(&self, epoch: u32) -> f64 {
        let k = self.milestones.iter().filter(|&&m| m <= epoch).count();
        self.initial_lr * fmath::pow(self.decay_factor, k as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelKind, ModelSpec};
    use alloc::vec;

    fn tiny_model() -> alloc::boxed::Box<dyn Model> {
        ModelSpec::new(ModelKind::PennBnf)
            .with_width_multiplier(0.25)
            .build(7)
            .unwrap()
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        // With fresh moments, m_hat/(sqrt(v_hat) + eps) = g/(|g| + eps), so
        // the very first update is lr * sign(g) up to epsilon rounding.
        let mut model = tiny_model();
        let mut before = Vec::new();
        model.for_each_param(&mut |p| before.push(p.clone()));

        let mut grads = Vec::new();
        model.for_each_param(&mut |p| {
            let mut g = Tensor::zeros(p.shape());
            for (i, gv) in g.as_mut_slice().iter_mut().enumerate() {
                *gv = if i % 2 == 0 { 0.37 } else { -1.21 };
            }
            grads.push(g);
        });
        let grad_refs: Vec<&Tensor> = grads.iter().collect();

        let mut state = AdamState::for_model(model.as_ref(), AdamConfig::default());
        let lr = 0.002;
        state.step(model.as_mut(), &grad_refs, lr).unwrap();
        assert_eq!(state.step_count(), 1);

        let mut after = Vec::new();
        model.for_each_param(&mut |p| after.push(p.clone()));
        for (t, (b, a)) in before.iter().zip(after.iter()).enumerate() {
            for (i, (&bv, &av)) in b.as_slice().iter().zip(a.as_slice()).enumerate() {
                let g: f64 = if i % 2 == 0 { 0.37 } else { -1.21 };
                let expected = bv - lr * g.signum();
                assert!(
                    (av - expected).abs() < 1e-9,
                    "tensor {t} elem {i}: {av} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut model = tiny_model();
        let mut before = Vec::new();
        model.for_each_param(&mut |p| before.push(p.clone()));

        let mut grads = Vec::new();
        model.for_each_param(&mut |p| grads.push(Tensor::zeros(p.shape())));
        let grad_refs: Vec<&Tensor> = grads.iter().collect();

        let mut state = AdamState::for_model(model.as_ref(), AdamConfig::default());
        for _ in 0..3 {
            state.step(model.as_mut(), &grad_refs, 0.01).unwrap();
        }
        let mut after = Vec::new();
        model.for_each_param(&mut |p| after.push(p.clone()));
        assert_eq!(before, after);
    }

    #[test]
    fn converges_on_scalar_quadratic() {
        // Minimize (w - 5)^2 by feeding Adam the exact gradient 2(w - 5).
        use crate::models::baseline::MlpMul;
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;

        // Any Model works as a parameter container; a quadratic on its very
        // first parameter entry keeps the test focused on the update rule.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut model = MlpMul::new(0.25, 18, &mut rng);
        let mut state = AdamState::for_model(&model, AdamConfig::default());
        for _ in 0..5000 {
            let mut grads = Vec::new();
            let mut first = true;
            Model::for_each_param(&model, &mut |p| {
                let mut g = Tensor::zeros(p.shape());
                if first {
                    g.as_mut_slice()[0] = 2.0 * (p.as_slice()[0] - 5.0);
                    first = false;
                }
                grads.push(g);
            });
            let grad_refs: Vec<&Tensor> = grads.iter().collect();
            state.step(&mut model, &grad_refs, 0.01).unwrap();
        }
        let mut w0 = f64::NAN;
        let mut first = true;
        Model::for_each_param(&model, &mut |p| {
            if first {
                w0 = p.as_slice()[0];
                first = false;
            }
        });
        assert!((w0 - 5.0).abs() < 1e-2, "w0 = {w0}");
    }

    #[test]
    fn step_rejects_bad_learning_rates_and_lengths() {
        let mut model = tiny_model();
        let mut grads = Vec::new();
        model.for_each_param(&mut |p| grads.push(Tensor::zeros(p.shape())));
        let grad_refs: Vec<&Tensor> = grads.iter().collect();
        let mut state = AdamState::for_model(model.as_ref(), AdamConfig::default());

        assert!(matches!(
            state.step(model.as_mut(), &grad_refs, 0.0),
            Err(Error::InvalidParameter { what: "learning rate", .. })
        ));
        assert!(matches!(
            state.step(model.as_mut(), &grad_refs[1..], 0.01),
            Err(Error::InputLength { op: "adam_step", .. })
        ));
    }

    #[test]
    fn milestone_schedule_matches_hand_computed_rates() {
        let s = LrSchedule::new(0.002, vec![60, 80, 100], 0.5).unwrap();
        assert_eq!(s.lr_at_epoch(0), 0.002);
        assert_eq!(s.lr_at_epoch(59), 0.002);
        // The milestone epoch itself already runs at the decayed rate.
        assert_eq!(s.lr_at_epoch(60), 0.001);
        assert_eq!(s.lr_at_epoch(80), 0.0005);
        assert_eq!(s.lr_at_epoch(100), 0.00025);
        assert_eq!(s.lr_at_epoch(149), 0.00025);

        let m = LrSchedule::new(0.01, vec![80, 120], 0.1).unwrap();
        assert!((m.lr_at_epoch(79) - 0.01).abs() < 1e-15);
        assert!((m.lr_at_epoch(80) - 0.001).abs() < 1e-15);
        assert!((m.lr_at_epoch(120) - 0.0001).abs() < 1e-15);
    }

    #[test]
    fn schedule_is_non_increasing() {
        let s = LrSchedule::new(0.01, vec![3, 9, 40, 90], 0.37).unwrap();
        let mut last = f64::INFINITY;
        for epoch in 0..150 {
            let lr = s.lr_at_epoch(epoch);
            assert!(lr <= last && lr > 0.0);
            last = lr;
        }
    }

    #[test]
    fn schedule_validates_inputs() {
        assert!(LrSchedule::new(0.0, vec![], 0.5).is_err());
        assert!(LrSchedule::new(-1.0, vec![], 0.5).is_err());
        assert!(LrSchedule::new(0.01, vec![], 0.0).is_err());
        assert!(LrSchedule::new(0.01, vec![], 1.0).is_err());
        assert!(LrSchedule::constant(0.01).is_ok());
    }
}
