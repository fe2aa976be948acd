//! Training objectives (MSE / MAE / MARE), evaluation metrics and the
//! prediction post-processing policy.
//!
//! MARE — the mean absolute *relative* error — is the headline objective:
//! thrust and specific impulse span several orders of magnitude across the
//! flight envelope, and a relative criterion keeps low-thrust conditions
//! from being drowned out by high-thrust ones. MAPE is exactly `100 x MARE`
//! and is reported as the evaluation metric.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

/// Guard below which a target magnitude makes relative error meaningless.
pub const DEFAULT_MARE_EPSILON: f64 = 1e-9;

/// Training loss selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    Mae,
    Mare,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Mse, LossKind::Mae, LossKind::Mare];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Mae => "mae",
            LossKind::Mare => "mare",
        }
    }

    pub fn parse(s: &str) -> Option<LossKind> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Some(LossKind::Mse),
            "mae" => Some(LossKind::Mae),
            "mare" => Some(LossKind::Mare),
            _ => None,
        }
    }
}

/// Regression target of a trained network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Thrust,
    SpecificImpulse,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Thrust, Target::SpecificImpulse];

    pub fn name(self) -> &'static str {
        match self {
            Target::Thrust => "thrust",
            Target::SpecificImpulse => "specific-impulse",
        }
    }

    pub fn parse(s: &str) -> Option<Target> {
        match s.to_ascii_lowercase().as_str() {
            "thrust" | "f" => Some(Target::Thrust),
            "specific-impulse" | "specific_impulse" | "impulse" | "isp" => {
                Some(Target::SpecificImpulse)
            }
            _ => None,
        }
    }
}

/// How raw network outputs and raw samples are treated around the physical
/// edge cases: negative thrust predictions are clamped to zero at inference
/// (an engine producing drag is reported as zero net thrust), and samples
/// with a zero specific impulse are unusable for a relative-error target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionPolicy {
    pub clamp_negative_thrust: bool,
    pub drop_zero_impulse: bool,
    pub mare_epsilon: f64,
}

impl Default for PredictionPolicy {
    fn default() -> PredictionPolicy {
        PredictionPolicy {
            clamp_negative_thrust: true,
            drop_zero_impulse: true,
            mare_epsilon: DEFAULT_MARE_EPSILON,
        }
    }
}

/// Post-process one raw model output. Clamping applies only at evaluation
/// and inference time; training sees the raw output so gradients flow.
pub fn apply_policy(target: Target, prediction: f64, policy: &PredictionPolicy) -> f64 {
    match target {
        Target::Thrust if policy.clamp_negative_thrust => prediction.max(0.0),
        _ => prediction,
    }
}

/// Build the selected loss on the tape: `predictions` must be a single
/// column (`[n, 1]` or `[1]`), `targets` must hold `n` values. Returns the
/// scalar loss node.
///
/// For MARE every `|target|` must exceed `mare_epsilon`; offending samples
/// are reported by index.
pub fn loss_node(
    tape: &mut Tape,
    kind: LossKind,
    predictions: NodeId,
    targets: &[f64],
    mare_epsilon: f64,
) -> Result<NodeId> {
    let pred_shape = tape.value(predictions).shape();
    if pred_shape.cols() != 1 {
        return Err(Error::DimensionMismatch {
            op: "loss",
            expected: pred_shape.with_cols(1),
            actual: pred_shape,
        });
    }
    if pred_shape.rows() != targets.len() {
        return Err(Error::InputLength {
            op: "loss",
            expected: pred_shape.rows(),
            actual: targets.len(),
        });
    }

    let mut tape_targets = Tensor::zeros(pred_shape);
    tape_targets.as_mut_slice().copy_from_slice(targets);
    let t = tape.input(tape_targets);

    let residual = tape.sub(predictions, t)?;
    let node = match kind {
        LossKind::Mse => {
            let sq = tape.square(residual);
            tape.mean_all(sq)
        }
        LossKind::Mae => {
            let a = tape.abs(residual);
            tape.mean_all(a)
        }
        LossKind::Mare => {
            let mut inv = Tensor::zeros(pred_shape);
            for (i, (iv, &tv)) in inv
                .as_mut_slice()
                .iter_mut()
                .zip(targets)
                .enumerate()
            {
                if tv.abs() <= mare_epsilon {
                    return Err(Error::ZeroTarget { index: i });
                }
                *iv = 1.0 / tv;
            }
            let inv_node = tape.input(inv);
            let scaled = tape.mul(residual, inv_node)?;
            let a = tape.abs(scaled);
            tape.mean_all(a)
        }
    };
    Ok(node)
}

/// Plain (non-differentiable) loss evaluation over paired slices.
pub fn loss_value(kind: LossKind, targets: &[f64], predictions: &[f64], mare_epsilon: f64) -> Result<f64> {
    if targets.len() != predictions.len() {
        return Err(Error::InputLength {
            op: "loss_value",
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::InputLength {
            op: "loss_value",
            expected: 1,
            actual: 0,
        });
    }
    let n = targets.len() as f64;
    let mut acc = 0.0;
    for (i, (&y, &y_hat)) in targets.iter().zip(predictions).enumerate() {
        let r = y_hat - y;
        acc += match kind {
            LossKind::Mse => r * r,
            LossKind::Mae => r.abs(),
            LossKind::Mare => {
                if y.abs() <= mare_epsilon {
                    return Err(Error::ZeroTarget { index: i });
                }
                (r / y).abs()
            }
        };
    }
    Ok(acc / n)
}

/// Mean absolute percentage error: exactly `100 x MARE`. Requires every
/// target to be nonzero.
pub fn mape(targets: &[f64], predictions: &[f64]) -> Result<f64> {
    Ok(100.0 * loss_value(LossKind::Mare, targets, predictions, 0.0)?)
}

/// Convenience carrying all three loss values plus MAPE for reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub mse: f64,
    pub mae: f64,
    pub mare: f64,
    pub mape: f64,
}

/// All metrics in one pass, with the MARE guard applied once.
pub fn metric_set(targets: &[f64], predictions: &[f64], mare_epsilon: f64) -> Result<MetricSet> {
    let mare = loss_value(LossKind::Mare, targets, predictions, mare_epsilon)?;
    Ok(MetricSet {
        mse: loss_value(LossKind::Mse, targets, predictions, mare_epsilon)?,
        mae: loss_value(LossKind::Mae, targets, predictions, mare_epsilon)?,
        mare,
        mape: 100.0 * mare,
    })
}

/// Collect predictions for a column node into a flat vector, applying the
/// prediction policy.
pub fn collect_predictions(
    tape: &Tape,
    output: NodeId,
    target: Target,
    policy: &PredictionPolicy,
) -> Vec<f64> {
    tape.value(output)
        .as_slice()
        .iter()
        .map(|&v| apply_policy(target, v, policy))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn loss_of(kind: LossKind, targets: &[f64], preds: &[f64]) -> f64 {
        loss_value(kind, targets, preds, DEFAULT_MARE_EPSILON).unwrap()
    }

    #[test]
    fn worked_single_sample_values() {
        // y = 2, y_hat = 1: MSE 1, MAE 1, MARE 0.5.
        assert_eq!(loss_of(LossKind::Mse, &[2.0], &[1.0]), 1.0);
        assert_eq!(loss_of(LossKind::Mae, &[2.0], &[1.0]), 1.0);
        assert_eq!(loss_of(LossKind::Mare, &[2.0], &[1.0]), 0.5);
        assert_eq!(mape(&[2.0], &[1.0]).unwrap(), 50.0);
    }

    #[test]
    fn mare_weights_small_targets_like_large_ones() {
        // y = [1, 100], y_hat = [1.1, 90]: both 10% off, MARE = 0.1 while
        // MAE = 5.05 is dominated by the large sample.
        let y = [1.0, 100.0];
        let y_hat = [1.1, 90.0];
        assert!((loss_of(LossKind::Mare, &y, &y_hat) - 0.1).abs() < 1e-12);
        assert!((loss_of(LossKind::Mae, &y, &y_hat) - 5.05).abs() < 1e-12);
    }

    #[test]
    fn zero_loss_iff_exact() {
        let y = [3.0, -4.0, 0.5];
        for kind in LossKind::ALL {
            assert_eq!(loss_of(kind, &y, &y), 0.0);
            assert!(loss_of(kind, &y, &[3.0, -4.0, 0.50001]) > 0.0);
        }
    }

    #[test]
    fn mare_rejects_near_zero_targets_by_index() {
        let err = loss_value(LossKind::Mare, &[1.0, 1e-12, 2.0], &[1.0; 3], 1e-9).unwrap_err();
        assert_eq!(err, Error::ZeroTarget { index: 1 });
        // MSE and MAE accept the same data.
        assert!(loss_value(LossKind::Mse, &[1.0, 0.0], &[0.0; 2], 1e-9).is_ok());
        assert!(loss_value(LossKind::Mae, &[1.0, 0.0], &[0.0; 2], 1e-9).is_ok());
    }

    #[test]
    fn mape_is_exactly_one_hundred_mare() {
        let y = [12.0, -7.5, 0.25, 9999.0];
        let y_hat = [11.0, -9.0, 0.75, 10001.0];
        let mare = loss_of(LossKind::Mare, &y, &y_hat);
        assert_eq!(mape(&y, &y_hat).unwrap(), 100.0 * mare);
    }

    #[test]
    fn mare_is_scale_invariant() {
        let y = [3.0, 17.0, 250.0, -42.0];
        let y_hat = [3.3, 15.0, 260.0, -40.0];
        let base = loss_of(LossKind::Mare, &y, &y_hat);
        for c in [1e-3, 1.0, 1e3] {
            let yc: vec::Vec<f64> = y.iter().map(|v| c * v).collect();
            let yhc: vec::Vec<f64> = y_hat.iter().map(|v| c * v).collect();
            let scaled = loss_of(LossKind::Mare, &yc, &yhc);
            assert!(
                (scaled - base).abs() < 1e-12,
                "scale {c}: {scaled} vs {base}"
            );
        }
    }

    #[test]
    fn tape_losses_agree_with_plain_evaluation() {
        let targets = [2.0, -3.5, 0.75];
        let preds = [1.5, -3.0, 1.0];
        for kind in LossKind::ALL {
            let mut tape = Tape::new();
            let p = tape.input(Tensor::matrix(3, 1, preds.to_vec()).unwrap());
            let node = loss_node(&mut tape, kind, p, &targets, DEFAULT_MARE_EPSILON).unwrap();
            let on_tape = tape.value(node).as_slice()[0];
            let plain = loss_of(kind, &targets, &preds);
            assert!(
                (on_tape - plain).abs() < 1e-15,
                "{}: {on_tape} vs {plain}",
                kind.name()
            );
        }
    }

    #[test]
    fn loss_node_validates_shapes_and_targets() {
        let mut tape = Tape::new();
        let wide = tape.input(Tensor::matrix(2, 2, vec![1.0; 4]).unwrap());
        assert!(matches!(
            loss_node(&mut tape, LossKind::Mse, wide, &[1.0, 1.0], 1e-9),
            Err(Error::DimensionMismatch { op: "loss", .. })
        ));

        let col = tape.input(Tensor::matrix(2, 1, vec![1.0, 1.0]).unwrap());
        assert!(matches!(
            loss_node(&mut tape, LossKind::Mse, col, &[1.0], 1e-9),
            Err(Error::InputLength { op: "loss", .. })
        ));
        assert_eq!(
            loss_node(&mut tape, LossKind::Mare, col, &[1.0, 0.0], 1e-9).unwrap_err(),
            Error::ZeroTarget { index: 1 }
        );
    }

    #[test]
    fn policy_clamps_thrust_only_at_inference() {
        let policy = PredictionPolicy::default();
        assert_eq!(apply_policy(Target::Thrust, -50.0, &policy), 0.0);
        assert_eq!(apply_policy(Target::Thrust, 120.0, &policy), 120.0);
        // Impulse predictions pass through untouched.
        assert_eq!(apply_policy(Target::SpecificImpulse, -3.0, &policy), -3.0);

        let off = PredictionPolicy {
            clamp_negative_thrust: false,
            ..PredictionPolicy::default()
        };
        assert_eq!(apply_policy(Target::Thrust, -50.0, &off), -50.0);
    }

    #[test]
    fn names_and_parsing_round_trip() {
        for kind in LossKind::ALL {
            assert_eq!(LossKind::parse(kind.name()), Some(kind));
        }
        for target in Target::ALL {
            assert_eq!(Target::parse(target.name()), Some(target));
        }
        assert_eq!(Target::parse("isp"), Some(Target::SpecificImpulse));
        assert_eq!(LossKind::parse("rmse"), None);
    }
}
