//! The training loop and evaluation helpers.
//!
//! One call to [`train`] owns the whole pipeline: materialise records,
//! split, subsample the training part, fit normalisation on what remains,
//! build the model from the run seed, run mini-batch Adam under the
//! milestone learning-rate schedule, track validation MAPE every epoch, and
//! finish with the parameters of the best validation epoch restored and the
//! held-out test metrics computed.
//!
//! Determinism: everything that draws randomness is seeded — the model from
//! `config.seed`, the epoch-`e` shuffle from `mix_seed(config.seed, e + 1)`,
//! the split from `config.split_seed` and the subsample draw from
//! `mix_seed(config.split_seed, SUBSAMPLE_STREAM)`. Two identical configs
//! produce bitwise-identical histories, parameters and metrics.

use std::time::Instant;

use penn_core::models::{Model, ModelSpec};
use penn_core::objectives::{
    collect_predictions, loss_node, metric_set, MetricSet, PredictionPolicy, Target,
};
use penn_core::optim::AdamState;
use penn_core::{Tape, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checkpoint::Checkpoint;
use crate::config::{DataSource, TrainConfig};
use crate::data::{self, NormalizationStats};
use crate::generate;
use crate::mix_seed;
use crate::schema::{SampleRecord, INPUT_COLUMNS};
use crate::{Error, Result};

/// Stream index separating the subsample draw from the split shuffle.
const SUBSAMPLE_STREAM: u64 = 0x5355_42;
/// Rows evaluated per forward pass when predicting large sets.
const EVAL_CHUNK: usize = 512;

/// One line of the epoch history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: u32,
    pub lr: f64,
    /// Mean per-sample training loss over the epoch, in the configured loss.
    pub train_loss: f64,
    /// Validation MAPE (%) with the prediction policy applied.
    pub val_mape: f64,
}

/// Everything a finished run produces.
pub struct TrainOutcome {
    pub config: TrainConfig,
    pub stats: NormalizationStats,
    /// The trained model with the best-validation-epoch parameters restored.
    pub model: Box<dyn Model>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: u32,
    pub best_val_mape: f64,
    /// Held-out test metrics of the restored model.
    pub test_metrics: MetricSet,
    pub param_count: usize,
    pub train_seconds: f64,
    /// First epoch whose training loss went non-finite, if any.
    pub diverged_at: Option<u32>,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub dropped_zero_impulse: usize,
}

impl TrainOutcome {
    /// A run counts as converged when no training batch produced a
    /// non-finite loss and the final metrics are finite.
    pub fn converged(&self) -> bool {
        self.diverged_at.is_none() && self.test_metrics.mape.is_finite()
    }

    pub fn test_mape(&self) -> f64 {
        self.test_metrics.mape
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec::new(self.config.model).with_width_multiplier(self.config.width_multiplier)
    }

    /// Package the trained model for persistence.
    pub fn into_checkpoint(self) -> Checkpoint {
        Checkpoint {
            spec: ModelSpec::new(self.config.model)
                .with_width_multiplier(self.config.width_multiplier),
            target: self.config.target,
            stats: self.stats,
            model: self.model,
        }
    }
}

/// Materialise the records behind a source. Zero-impulse rows are dropped
/// here for both file and synthetic sources, mirroring what loading a
/// written CSV would do; the second element reports how many.
pub fn load_records(source: &DataSource) -> Result<(Vec<SampleRecord>, usize)> {
    match source {
        DataSource::Csv(path) => {
            let report = data::load_csv(path)?;
            Ok((report.records, report.dropped_zero_impulse))
        }
        DataSource::Synthetic(gen) => {
            let all = generate::generate(gen)?;
            let (kept, dropped) = data::drop_zero_impulse(all);
            if kept.is_empty() {
                return Err(Error::Invalid(
                    "every generated record had zero specific impulse".into(),
                ));
            }
            Ok((kept, dropped))
        }
        DataSource::Pooled {
            count_each,
            seed,
            noise_sd,
        } => {
            let mut all = Vec::with_capacity(count_each * 2);
            for (stream, regime) in generate::Regime::ALL.into_iter().enumerate() {
                let mut gen = generate::GenConfig::new(regime, *count_each, mix_seed(*seed, stream as u64));
                if let Some(sd) = noise_sd {
                    gen.noise_sd = *sd;
                }
                all.extend(generate::generate(&gen)?);
            }
            let (kept, dropped) = data::drop_zero_impulse(all);
            Ok((kept, dropped))
        }
    }
}

/// Policy-adjusted predictions for a record slice, evaluated in chunks.
pub fn predictions_for(
    model: &dyn Model,
    stats: &NormalizationStats,
    records: &[SampleRecord],
    target: Target,
    policy: &PredictionPolicy,
) -> Result<Vec<f64>> {
    let mut predictions = Vec::with_capacity(records.len());
    for chunk in records.chunks(EVAL_CHUNK) {
        let mut flat = Vec::with_capacity(chunk.len() * INPUT_COLUMNS);
        for r in chunk {
            flat.extend_from_slice(&stats.normalize(&r.inputs));
        }
        let x = Tensor::matrix(chunk.len(), INPUT_COLUMNS, flat)
            .expect("chunk layout matches declared shape");
        let mut tape = Tape::default();
        let input = tape.input(x);
        let output = model.forward(&mut tape, input)?;
        predictions.extend(collect_predictions(&tape, output, target, policy));
    }
    Ok(predictions)
}

/// Policy-adjusted prediction for a single record's inputs.
pub fn predict_one(
    model: &dyn Model,
    stats: &NormalizationStats,
    inputs: &[f64; INPUT_COLUMNS],
    target: Target,
    policy: &PredictionPolicy,
) -> Result<f64> {
    let z = stats.normalize(inputs);
    let mut tape = Tape::default();
    let input = tape.input(Tensor::vector(z.to_vec()));
    let output = model.forward(&mut tape, input)?;
    Ok(collect_predictions(&tape, output, target, policy)[0])
}

/// All four metrics of a model over a record slice.
pub fn evaluate_model(
    model: &dyn Model,
    stats: &NormalizationStats,
    records: &[SampleRecord],
    target: Target,
    policy: &PredictionPolicy,
) -> Result<MetricSet> {
    let predictions = predictions_for(model, stats, records, target, policy)?;
    let targets: Vec<f64> = records.iter().map(|r| r.target(target)).collect();
    Ok(metric_set(&targets, &predictions, policy.mare_epsilon)?)
}

/// Mean wall-clock seconds of one single-sample inference, including input
/// normalisation, measured over `passes` repetitions.
pub fn mean_inference_seconds(
    model: &dyn Model,
    stats: &NormalizationStats,
    record: &SampleRecord,
    target: Target,
    policy: &PredictionPolicy,
    passes: u32,
) -> Result<f64> {
    assert!(passes > 0);
    // One warm pass so allocation paths are primed before the clock starts.
    std::hint::black_box(predict_one(model, stats, &record.inputs, target, policy)?);
    let start = Instant::now();
    for _ in 0..passes {
        let value = predict_one(model, stats, &record.inputs, target, policy)?;
        std::hint::black_box(value);
    }
    Ok(start.elapsed().as_secs_f64() / passes as f64)
}

fn snapshot_params(model: &dyn Model) -> Vec<Tensor> {
    let mut out = Vec::new();
    model.for_each_param(&mut |p| out.push(p.clone()));
    out
}

fn restore_params(model: &mut dyn Model, saved: &[Tensor]) {
    let mut index = 0;
    model.for_each_param_mut(&mut |p| {
        p.as_mut_slice().copy_from_slice(saved[index].as_slice());
        index += 1;
    });
    debug_assert_eq!(index, saved.len());
}

/// Run one full training job.
pub fn train(config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let started = Instant::now();

    let (records, dropped_zero_impulse) = load_records(&config.source)?;
    let split = data::split(&records, config.split_weights, config.split_seed)?;
    let train_records = data::subsample(
        &split.train,
        config.subsample_factor,
        mix_seed(config.split_seed, SUBSAMPLE_STREAM),
    )?;
    let stats = NormalizationStats::fit(&train_records)?;

    let spec = ModelSpec::new(config.model).with_width_multiplier(config.width_multiplier);
    let mut model = spec.build(config.seed)?;
    let schedule = config.lr_schedule()?;
    let mut adam = AdamState::for_model(model.as_ref(), config.adam);
    let policy = config.policy();

    let train_inputs: Vec<[f64; INPUT_COLUMNS]> = train_records
        .iter()
        .map(|r| stats.normalize(&r.inputs))
        .collect();
    let train_targets: Vec<f64> = train_records
        .iter()
        .map(|r| r.target(config.target))
        .collect();

    let mut history: Vec<EpochRecord> = Vec::with_capacity(config.epochs as usize);
    let mut best: Option<(u32, f64, Vec<Tensor>)> = None;
    let mut diverged_at = None;

    'epochs: for epoch in 0..config.epochs {
        let lr = schedule.lr_at_epoch(epoch);
        let mut order: Vec<usize> = (0..train_inputs.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, epoch as u64 + 1));
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        // Remainder rows form a final short batch; nothing is dropped.
        for batch in order.chunks(config.batch_size) {
            let mut flat = Vec::with_capacity(batch.len() * INPUT_COLUMNS);
            let mut y = Vec::with_capacity(batch.len());
            for &i in batch {
                flat.extend_from_slice(&train_inputs[i]);
                y.push(train_targets[i]);
            }
            let x = Tensor::matrix(batch.len(), INPUT_COLUMNS, flat)
                .expect("batch layout matches declared shape");

            let mut tape = Tape::default();
            let input = tape.input(x);
            let output = model.forward(&mut tape, input)?;
            let loss = loss_node(&mut tape, config.loss, output, &y, config.mare_epsilon)?;
            let loss_value = tape.value(loss).as_slice()[0];
            if !loss_value.is_finite() {
                diverged_at = Some(epoch);
                break 'epochs;
            }
            epoch_loss += loss_value * batch.len() as f64;

            let grads = tape.backward(loss)?;
            let grad_refs: Vec<&Tensor> =
                tape.params().iter().map(|&id| grads.get(id)).collect();
            adam.step(model.as_mut(), &grad_refs, lr)?;
        }

        let train_loss = epoch_loss / train_inputs.len() as f64;
        let val_mape =
            evaluate_model(model.as_ref(), &stats, &split.val, config.target, &policy)?.mape;
        history.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            val_mape,
        });
        // Strict improvement keeps the earliest epoch among ties.
        let improved = best.as_ref().is_none_or(|(_, b, _)| val_mape < *b);
        if val_mape.is_finite() && improved {
            best = Some((epoch, val_mape, snapshot_params(model.as_ref())));
        }
    }

    let (best_epoch, best_val_mape) = match &best {
        Some((epoch, val, params)) => {
            restore_params(model.as_mut(), params);
            (*epoch, *val)
        }
        // Divergence before the first completed epoch: keep the current
        // parameters; `converged()` reports the run as unusable anyway.
        None => (0, f64::NAN),
    };
    let test_metrics =
        evaluate_model(model.as_ref(), &stats, &split.test, config.target, &policy)?;

    Ok(TrainOutcome {
        config: config.clone(),
        param_count: model.param_count(),
        stats,
        model,
        history,
        best_epoch,
        best_val_mape,
        test_metrics,
        train_seconds: started.elapsed().as_secs_f64(),
        diverged_at,
        train_size: train_records.len(),
        val_size: split.val.len(),
        test_size: split.test.len(),
        dropped_zero_impulse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use penn_core::models::ModelKind;
    use penn_core::objectives::LossKind;
    use crate::config::SourceKind;
    use crate::generate::{GenConfig, Regime};

    fn tiny_config() -> TrainConfig {
        let mut c = TrainConfig::defaults(ModelKind::PennBnf, SourceKind::HighSpeed);
        c.source = DataSource::Synthetic(GenConfig::new(Regime::HighSpeed, 300, 21));
        c.epochs = 3;
        c.batch_size = 32;
        c.width_multiplier = 0.25;
        c
    }

    #[test]
    fn identical_configs_train_bitwise_identically() {
        let config = tiny_config();
        let a = train(&config).unwrap();
        let b = train(&config).unwrap();
        assert_eq!(a.history.len(), b.history.len());
        for (x, y) in a.history.iter().zip(b.history.iter()) {
            assert_eq!(x.train_loss.to_bits(), y.train_loss.to_bits());
            assert_eq!(x.val_mape.to_bits(), y.val_mape.to_bits());
        }
        assert_eq!(a.test_metrics.mape.to_bits(), b.test_metrics.mape.to_bits());
        assert_eq!(a.best_epoch, b.best_epoch);

        let mut pa = Vec::new();
        a.model.for_each_param(&mut |t| pa.extend_from_slice(t.as_slice()));
        let mut pb = Vec::new();
        b.model.for_each_param(&mut |t| pb.extend_from_slice(t.as_slice()));
        assert_eq!(pa.len(), pb.len());
        assert!(pa.iter().zip(&pb).all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    #[test]
    fn different_seed_changes_the_run() {
        let config = tiny_config();
        let mut other = config.clone();
        other.seed = config.seed + 1;
        let a = train(&config).unwrap();
        let b = train(&other).unwrap();
        assert_ne!(
            a.history[0].train_loss.to_bits(),
            b.history[0].train_loss.to_bits()
        );
    }

    #[test]
    fn best_epoch_is_the_earliest_validation_minimum() {
        let outcome = train(&tiny_config()).unwrap();
        assert_eq!(outcome.history.len(), 3);
        let min = outcome
            .history
            .iter()
            .map(|h| h.val_mape)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(outcome.best_val_mape, min);
        let first_min = outcome
            .history
            .iter()
            .position(|h| h.val_mape == min)
            .unwrap() as u32;
        assert_eq!(outcome.best_epoch, first_min);
    }

    #[test]
    fn learning_rate_schedule_is_recorded_per_epoch() {
        let mut config = tiny_config();
        config.epochs = 4;
        config.lr_milestones = vec![2];
        config.lr_decay = 0.5;
        config.initial_lr = 0.002;
        let outcome = train(&config).unwrap();
        let lrs: Vec<f64> = outcome.history.iter().map(|h| h.lr).collect();
        // The milestone epoch itself already runs at the decayed rate.
        assert_eq!(lrs, vec![0.002, 0.002, 0.001, 0.001]);
    }

    #[test]
    fn subsampling_shrinks_the_training_split_only() {
        let mut config = tiny_config();
        config.subsample_factor = 3;
        let outcome = train(&config).unwrap();
        // 300 generated minus zero-impulse drops (none in high-speed), split
        // 3:1:1 -> 180/60/60, then the train part shrinks by the factor.
        assert_eq!(outcome.train_size, 60);
        assert_eq!(outcome.val_size, 60);
        assert_eq!(outcome.test_size, 60);
    }

    #[test]
    fn absurd_learning_rate_is_flagged_as_divergence() {
        let mut config = tiny_config();
        config.loss = LossKind::Mse; // raw newton-scale residuals
        // Adam steps are roughly `lr` per parameter regardless of gradient
        // scale, so this drives activations past f64 range within an epoch
        // or two and the non-finite loss must be caught, not propagated.
        config.initial_lr = 1e300;
        config.epochs = 5;
        let outcome = train(&config).unwrap();
        assert!(outcome.diverged_at.is_some());
        assert!(!outcome.converged());
    }

    #[test]
    fn chunked_evaluation_matches_per_record_forward() {
        let config = tiny_config();
        let outcome = train(&config).unwrap();
        let (records, _) = load_records(&config.source).unwrap();
        let subset = &records[..130]; // forces an uneven final chunk
        let policy = config.policy();
        let chunked = predictions_for(
            outcome.model.as_ref(),
            &outcome.stats,
            subset,
            config.target,
            &policy,
        )
        .unwrap();
        for (i, r) in subset.iter().enumerate() {
            let single = predict_one(
                outcome.model.as_ref(),
                &outcome.stats,
                &r.inputs,
                config.target,
                &policy,
            )
            .unwrap();
            assert_eq!(chunked[i].to_bits(), single.to_bits(), "row {i}");
        }
    }

    #[test]
    fn thrust_predictions_are_clamped_by_policy() {
        let config = tiny_config();
        let outcome = train(&config).unwrap();
        let (records, _) = load_records(&config.source).unwrap();
        let policy = config.policy();
        let preds = predictions_for(
            outcome.model.as_ref(),
            &outcome.stats,
            &records[..50],
            Target::Thrust,
            &policy,
        )
        .unwrap();
        assert!(preds.iter().all(|p| *p >= 0.0));
    }
}
