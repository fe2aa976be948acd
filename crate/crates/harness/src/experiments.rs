//! Study runners behind `penn experiment`.
//!
//! Five studies, each writing tidy CSVs under an output directory and
//! returning its rows for programmatic use:
//!
//! * **comparative** — every model kind on both regimes and both targets;
//!   emits a per-run CSV plus a model-keyed summary table whose synthesis
//!   columns are the arithmetic means of the two regime columns.
//! * **loss** — MLP-Mul and PENN-BNF trained under MSE/MAE/MARE across
//!   seeds, with per-seed rows and per-cell means.
//! * **size** — models retrained while the training split is subsampled
//!   by growing factors; every row carries a converged flag.
//! * **scaling** — the PENN-BNF width family (multipliers 1/4 … 4).
//! * **timing** — training wall time and single-sample inference latency
//!   for every model kind, plus a hardware description.
//!
//! All runners reuse the same generated decks (fixed deck seed) so seed
//! sweeps vary only initialisation, shuffling and the split.

use std::path::{Path, PathBuf};

use penn_core::models::{ModelKind, ModelSpec};
use penn_core::objectives::{LossKind, MetricSet, Target};

use crate::config::{SourceKind, TrainConfig};
use crate::generate::{self, GenConfig, Regime};
use crate::train::{self, mean_inference_seconds, TrainOutcome};
use crate::{Error, Result};

/// Seed of the generated decks. Fixed across a study's seed sweep so every
/// seed trains on identical records.
pub const DECK_SEED: u64 = 7;

/// A run counts as converged when no non-finite loss occurred and the
/// selected checkpoint's validation MAPE is at most 100%.
pub const CONVERGENCE_MAPE_LIMIT: f64 = 100.0;

fn base_config(
    model: ModelKind,
    set: SourceKind,
    count: usize,
    epochs: Option<u32>,
    seed: u64,
    target: Target,
) -> TrainConfig {
    let mut config = TrainConfig::defaults(model, set);
    config.target = target;
    config.seed = seed;
    config.split_seed = seed;
    config.source = set.source(count, DECK_SEED);
    if let Some(e) = epochs {
        config.epochs = e;
    }
    config
}

fn run_converged(outcome: &TrainOutcome) -> bool {
    outcome.converged()
        && outcome.best_val_mape.is_finite()
        && outcome.best_val_mape <= CONVERGENCE_MAPE_LIMIT
}

fn announce(study: &str, detail: &str) {
    eprintln!("[{study}] {detail}");
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// CPU model plus core count, for the timing table.
pub fn hardware_description() -> String {
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|text| {
            text.lines().find_map(|line| {
                line.strip_prefix("model name")
                    .map(|rest| rest.trim_start_matches([' ', '\t', ':']).trim().to_string())
            })
        })
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| std::env::consts::ARCH.to_string());
    format!("{cpu} ({cores} logical cores, single-threaded run)")
}

// ---------------------------------------------------------------------------
// Comparative study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ComparativeConfig {
    pub out_dir: PathBuf,
    pub models: Vec<ModelKind>,
    /// Records per regime deck.
    pub count: usize,
    /// `None` keeps the standard 150 epochs.
    pub epochs: Option<u32>,
    pub seed: u64,
}

impl ComparativeConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        ComparativeConfig {
            out_dir: out_dir.into(),
            models: ModelKind::ALL.to_vec(),
            count: 2_500,
            epochs: None,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComparativeRow {
    pub set: SourceKind,
    pub model: ModelKind,
    pub target: Target,
    pub params: usize,
    pub metrics: MetricSet,
    pub best_epoch: u32,
    pub converged: bool,
    pub train_seconds: f64,
}

/// Thrust and specific-impulse test MAPE for one model on one dataset.
#[derive(Debug, Clone, Copy)]
pub struct TargetPair {
    pub thrust: f64,
    pub impulse: f64,
}

impl TargetPair {
    pub fn average(&self) -> f64 {
        (self.thrust + self.impulse) / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct ComparativeSummary {
    pub model: ModelKind,
    pub params: usize,
    pub high_speed: TargetPair,
    pub low_speed: TargetPair,
    /// Per-target arithmetic mean of the two regime columns.
    pub synthesis: TargetPair,
}

pub fn run_comparative(
    cfg: &ComparativeConfig,
) -> Result<(Vec<ComparativeRow>, Vec<ComparativeSummary>)> {
    const SETS: [SourceKind; 2] = [SourceKind::HighSpeed, SourceKind::LowSpeed];

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &model in &cfg.models {
        let mut mape = [[f64::NAN; 2]; 2]; // [set][target]
        let mut params = 0;
        for (si, &set) in SETS.iter().enumerate() {
            for (ti, &target) in Target::ALL.iter().enumerate() {
                let config =
                    base_config(model, set, cfg.count, cfg.epochs, cfg.seed, target);
                announce(
                    "comparative",
                    &format!("{} / {} / {}", set.name(), model.name(), target.name()),
                );
                let outcome = train::train(&config)?;
                announce(
                    "comparative",
                    &format!(
                        "  -> test MAPE {:.3}% (best epoch {})",
                        outcome.test_mape(),
                        outcome.best_epoch
                    ),
                );
                mape[si][ti] = outcome.test_mape();
                params = outcome.param_count;
                rows.push(ComparativeRow {
                    set,
                    model,
                    target,
                    params: outcome.param_count,
                    metrics: outcome.test_metrics,
                    best_epoch: outcome.best_epoch,
                    converged: run_converged(&outcome),
                    train_seconds: outcome.train_seconds,
                });
            }
        }
        let high_speed = TargetPair { thrust: mape[0][0], impulse: mape[0][1] };
        let low_speed = TargetPair { thrust: mape[1][0], impulse: mape[1][1] };
        let synthesis = TargetPair {
            thrust: (high_speed.thrust + low_speed.thrust) / 2.0,
            impulse: (high_speed.impulse + low_speed.impulse) / 2.0,
        };
        summaries.push(ComparativeSummary { model, params, high_speed, low_speed, synthesis });
    }

    let run_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.set.name().to_string(),
                r.model.name().to_string(),
                r.target.name().to_string(),
                r.params.to_string(),
                num(r.metrics.mape),
                num(r.metrics.mare),
                num(r.metrics.mae),
                num(r.metrics.mse),
                r.best_epoch.to_string(),
                r.converged.to_string(),
                num(r.train_seconds),
            ]
        })
        .collect();
    write_rows(
        &cfg.out_dir.join("comparative_runs.csv"),
        &[
            "dataset",
            "model",
            "target",
            "params",
            "test_mape",
            "test_mare",
            "test_mae",
            "test_mse",
            "best_epoch",
            "converged",
            "train_seconds",
        ],
        &run_rows,
    )?;

    let table_rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.model.name().to_string(),
                s.params.to_string(),
                num(s.high_speed.thrust),
                num(s.high_speed.impulse),
                num(s.high_speed.average()),
                num(s.low_speed.thrust),
                num(s.low_speed.impulse),
                num(s.low_speed.average()),
                num(s.synthesis.thrust),
                num(s.synthesis.impulse),
                num(s.synthesis.average()),
            ]
        })
        .collect();
    write_rows(
        &cfg.out_dir.join("comparative.csv"),
        &[
            "model",
            "params",
            "hs_thrust_mape",
            "hs_impulse_mape",
            "hs_average_mape",
            "ls_thrust_mape",
            "ls_impulse_mape",
            "ls_average_mape",
            "synthesis_thrust_mape",
            "synthesis_impulse_mape",
            "synthesis_average_mape",
        ],
        &table_rows,
    )?;
    Ok((rows, summaries))
}

// ---------------------------------------------------------------------------
// Loss ablation study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LossStudyConfig {
    pub out_dir: PathBuf,
    pub sets: Vec<SourceKind>,
    pub models: Vec<ModelKind>,
    pub losses: Vec<LossKind>,
    pub targets: Vec<Target>,
    pub seeds: Vec<u64>,
    pub count: usize,
    pub epochs: Option<u32>,
}

impl LossStudyConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        LossStudyConfig {
            out_dir: out_dir.into(),
            sets: vec![SourceKind::HighSpeed, SourceKind::LowSpeed],
            models: vec![ModelKind::MlpMul, ModelKind::PennBnf],
            losses: LossKind::ALL.to_vec(),
            targets: Target::ALL.to_vec(),
            seeds: vec![1, 2, 3],
            count: 2_500,
            epochs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LossStudyRow {
    pub set: SourceKind,
    pub model: ModelKind,
    pub loss: LossKind,
    pub target: Target,
    pub seed: u64,
    pub mape: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct LossStudySummary {
    pub set: SourceKind,
    pub model: ModelKind,
    pub loss: LossKind,
    pub target: Target,
    pub mean_mape: f64,
    pub seeds: usize,
    pub all_converged: bool,
}

pub fn run_loss_study(
    cfg: &LossStudyConfig,
) -> Result<(Vec<LossStudyRow>, Vec<LossStudySummary>)> {
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &set in &cfg.sets {
        for &model in &cfg.models {
            for &loss in &cfg.losses {
                for &target in &cfg.targets {
                    let mut mapes = Vec::new();
                    let mut all_converged = true;
                    for &seed in &cfg.seeds {
                        let mut config =
                            base_config(model, set, cfg.count, cfg.epochs, seed, target);
                        config.loss = loss;
                        announce(
                            "loss",
                            &format!(
                                "{} / {} / {} / {} / seed {seed}",
                                set.name(),
                                model.name(),
                                loss.name(),
                                target.name()
                            ),
                        );
                        let outcome = train::train(&config)?;
                        announce(
                            "loss",
                            &format!("  -> test MAPE {:.3}%", outcome.test_mape()),
                        );
                        mapes.push(outcome.test_mape());
                        let converged = run_converged(&outcome);
                        all_converged &= converged;
                        rows.push(LossStudyRow {
                            set,
                            model,
                            loss,
                            target,
                            seed,
                            mape: outcome.test_mape(),
                            converged,
                        });
                    }
                    summaries.push(LossStudySummary {
                        set,
                        model,
                        loss,
                        target,
                        mean_mape: mean(&mapes),
                        seeds: mapes.len(),
                        all_converged,
                    });
                }
            }
        }
    }

    let run_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.set.name().to_string(),
                r.model.name().to_string(),
                r.loss.name().to_string(),
                r.target.name().to_string(),
                r.seed.to_string(),
                num(r.mape),
                r.converged.to_string(),
            ]
        })
        .collect();
    write_rows(
        &cfg.out_dir.join("loss_study_runs.csv"),
        &["dataset", "model", "loss", "target", "seed", "test_mape", "converged"],
        &run_rows,
    )?;

    let mean_rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.set.name().to_string(),
                s.model.name().to_string(),
                s.loss.name().to_string(),
                s.target.name().to_string(),
                s.seeds.to_string(),
                num(s.mean_mape),
                s.all_converged.to_string(),
            ]
        })
        .collect();
    write_rows(
        &cfg.out_dir.join("loss_study_means.csv"),
        &["dataset", "model", "loss", "target", "seeds", "mean_test_mape", "all_converged"],
        &mean_rows,
    )?;
    Ok((rows, summaries))
}

// ---------------------------------------------------------------------------
// Training-set size study
// ---------------------------------------------------------------------------

/// Subsample factors to sweep on one dataset flavour.
#[derive(Debug, Clone)]
pub struct SizePlan {
    pub set: SourceKind,
    pub factors: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct SizeStudyConfig {
    pub out_dir: PathBuf,
    pub plans: Vec<SizePlan>,
    pub models: Vec<ModelKind>,
    pub targets: Vec<Target>,
    pub seeds: Vec<u64>,
    pub count: usize,
    pub epochs: Option<u32>,
}

impl SizeStudyConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        SizeStudyConfig {
            out_dir: out_dir.into(),
            plans: vec![
                SizePlan { set: SourceKind::HighSpeed, factors: vec![1, 5, 20, 200, 500] },
                SizePlan { set: SourceKind::LowSpeed, factors: vec![1, 5, 20, 100, 200] },
            ],
            models: vec![ModelKind::MlpMul, ModelKind::PennBnf],
            targets: Target::ALL.to_vec(),
            seeds: vec![1, 2, 3],
            count: 5_000,
            epochs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SizeStudyRow {
    pub set: SourceKind,
    pub model: ModelKind,
    pub factor: u32,
    pub train_size: usize,
    pub seed: u64,
    pub target: Target,
    pub mape: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SizeStudySummary {
    pub set: SourceKind,
    pub model: ModelKind,
    pub factor: u32,
    pub target: Target,
    pub mean_mape: f64,
    pub all_converged: bool,
}

pub fn run_size_study(
    cfg: &SizeStudyConfig,
) -> Result<(Vec<SizeStudyRow>, Vec<SizeStudySummary>)> {
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for plan in &cfg.plans {
        for &model in &cfg.models {
            for &factor in &plan.factors {
                for &target in &cfg.targets {
                    let mut mapes = Vec::new();
                    let mut all_converged = true;
                    for &seed in &cfg.seeds {
                        let mut config = base_config(
                            model, plan.set, cfg.count, cfg.epochs, seed, target,
                        );
                        config.subsample_factor = factor;
                        announce(
                            "size",
                            &format!(
                                "{} / {} / factor {factor} / {} / seed {seed}",
                                plan.set.name(),
                                model.name(),
                                target.name()
                            ),
                        );
                        let outcome = train::train(&config)?;
                        let converged = run_converged(&outcome);
                        announce(
                            "size",
                            &format!(
                                "  -> {} train rows, test MAPE {:.3}%{}",
                                outcome.train_size,
                                outcome.test_mape(),
                                if converged { "" } else { " (not converged)" }
                            ),
                        );
                        mapes.push(outcome.test_mape());
                        all_converged &= converged;
                        rows.push(SizeStudyRow {
                            set: plan.set,
                            model,
                            factor,
                            train_size: outcome.train_size,
                            seed,
                            target,
                            mape: outcome.test_mape(),
                            converged,
                        });
                    }
                    summaries.push(SizeStudySummary {
                        set: plan.set,
                        model,
                        factor,
                        target,
                        mean_mape: mean(&mapes),
                        all_converged,
                    });
                }
            }
        }
    }

    let run_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.set.name().to_string(),
                r.model.name().to_string(),
                r.factor.to_string(),
                r.train_size.to_string(),
                r.seed.to_string(),
                r.target.name().to_string(),
                num(r.mape),
                r.converged.to_string(),
            ]
        })
        .collect();
    write_rows(
        &cfg.out_dir.join("size_study_runs.csv"),
        &[
            "dataset",
            "model",
            "factor",
            "train_size",
            "seed",
            "target",
            "test_mape",
            "converged",
        ],
        &run_rows,
    )?;

    let mean_rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.set.name().to_string(),
                s.model.name().to_string(),
                s.factor.to_string(),
                s.target.name().to_string(),
                num(s.mean_mape),
                s.all_converged.to_string(),
            ]
        })
        .collect();
    write_rows(
        &cfg.out_dir.join("size_study_means.csv"),
        &["dataset", "model", "factor", "target", "mean_test_mape", "all_converged"],
        &mean_rows,
    )?;
    Ok((rows, summaries))
}

// ---------------------------------------------------------------------------
// Width-scaling study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ScalingStudyConfig {
    pub out_dir: PathBuf,
    pub set: SourceKind,
    pub model: ModelKind,
    pub targets: Vec<Target>,
    pub multipliers: Vec<f64>,
    pub seeds: Vec<u64>,
    pub count: usize,
    pub epochs: Option<u32>,
}

impl ScalingStudyConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        ScalingStudyConfig {
            out_dir: out_dir.into(),
            set: SourceKind::HighSpeed,
            model: ModelKind::PennBnf,
            targets: Target::ALL.to_vec(),
            multipliers: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            seeds: vec![1, 2, 3],
            count: 2_500,
            epochs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScalingStudyRow {
    pub multiplier: f64,
    pub params: usize,
    pub seed: u64,
    pub target: Target,
    pub mape: f64,
    pub converged: bool,
    pub train_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingStudySummary {
    pub multiplier: f64,
    pub params: usize,
    pub target: Target,
    pub mean_mape: f64,
    pub all_converged: bool,
}

pub fn run_scaling_study(
    cfg: &ScalingStudyConfig,
) -> Result<(Vec<ScalingStudyRow>, Vec<ScalingStudySummary>)> {
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &multiplier in &cfg.multipliers {
        let params = ModelSpec::new(cfg.model)
            .with_width_multiplier(multiplier)
            .param_count();
        for &target in &cfg.targets {
            let mut mapes = Vec::new();
            let mut all_converged = true;
            for &seed in &cfg.seeds {
                let mut config =
                    base_config(cfg.model, cfg.set, cfg.count, cfg.epochs, seed, target);
                config.width_multiplier = multiplier;
                announce(
                    "scaling",
                    &format!(
                        "multiplier {multiplier} ({params} params) / {} / seed {seed}",
                        target.name()
                    ),
                );
                let outcome = train::train(&config)?;
                announce("scaling", &format!("  -> test MAPE {:.3}%", outcome.test_mape()));
                mapes.push(outcome.test_mape());
                let converged = run_converged(&outcome);
                all_converged &= converged;
                rows.push(ScalingStudyRow {
                    multiplier,
                    params,
                    seed,
                    target,
                    mape: outcome.test_mape(),
                    converged,
                    train_seconds: outcome.train_seconds,
                });
            }
            summaries.push(ScalingStudySummary {
                multiplier,
                params,
                target,
                mean_mape: mean(&mapes),
                all_converged,
            });
        }
    }

    let run_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.multiplier),
                r.params.to_string(),
                r.seed.to_string(),
                r.target.name().to_string(),
                num(r.mape),
                r.converged.to_string(),
                num(r.train_seconds),
            ]
        })
        .collect();
    write_rows(
        &cfg.out_dir.join("scaling_study_runs.csv"),
        &["multiplier", "params", "seed", "target", "test_mape", "converged", "train_seconds"],
        &run_rows,
    )?;

    let mean_rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                num(s.multiplier),
                s.params.to_string(),
                s.target.name().to_string(),
                num(s.mean_mape),
                s.all_converged.to_string(),
            ]
        })
        .collect();
    write_rows(
        &cfg.out_dir.join("scaling_study_means.csv"),
        &["multiplier", "params", "target", "mean_test_mape", "all_converged"],
        &mean_rows,
    )?;
    Ok((rows, summaries))
}

// ---------------------------------------------------------------------------
// Timing study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TimingStudyConfig {
    pub out_dir: PathBuf,
    pub set: SourceKind,
    pub models: Vec<ModelKind>,
    pub target: Target,
    pub count: usize,
    pub epochs: Option<u32>,
    pub seed: u64,
    pub inference_passes: u32,
}

impl TimingStudyConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        TimingStudyConfig {
            out_dir: out_dir.into(),
            set: SourceKind::HighSpeed,
            models: ModelKind::ALL.to_vec(),
            target: Target::Thrust,
            count: 2_000,
            epochs: None,
            seed: 1,
            inference_passes: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimingStudyRow {
    pub model: ModelKind,
    pub params: usize,
    pub train_seconds: f64,
    pub inference_seconds: f64,
    pub mape: f64,
}

pub fn run_timing_study(
    cfg: &TimingStudyConfig,
) -> Result<(Vec<TimingStudyRow>, String)> {
    let hardware = hardware_description();
    let probe = generate::generate(&GenConfig::new(Regime::HighSpeed, 1, DECK_SEED))?
        .pop()
        .expect("one record was requested");

    let mut rows = Vec::new();
    for &model in &cfg.models {
        let config = base_config(model, cfg.set, cfg.count, cfg.epochs, cfg.seed, cfg.target);
        announce("timing", &format!("training {}", model.name()));
        let outcome = train::train(&config)?;
        let latency = mean_inference_seconds(
            outcome.model.as_ref(),
            &outcome.stats,
            &probe,
            cfg.target,
            &config.policy(),
            cfg.inference_passes,
        )?;
        announce(
            "timing",
            &format!(
                "  -> {:.1}s training, {:.1}us per sample",
                outcome.train_seconds,
                latency * 1e6
            ),
        );
        rows.push(TimingStudyRow {
            model,
            params: outcome.param_count,
            train_seconds: outcome.train_seconds,
            inference_seconds: latency,
            mape: outcome.test_mape(),
        });
    }

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.model.name().to_string(),
                r.params.to_string(),
                num(r.train_seconds),
                num(r.inference_seconds),
                num(r.mape),
                hardware.clone(),
            ]
        })
        .collect();
    write_rows(
        &cfg.out_dir.join("timing.csv"),
        &["model", "params", "train_seconds", "inference_seconds", "test_mape", "hardware"],
        &csv_rows,
    )?;
    Ok((rows, hardware))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_lines(path: &Path) -> Vec<String> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(str::to_string)
            .collect()
    }

    #[test]
    fn comparative_summary_columns_are_definitional_means() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ComparativeConfig::new(dir.path());
        cfg.models = vec![ModelKind::PennFcf];
        cfg.count = 250;
        cfg.epochs = Some(1);
        let (rows, summaries) = run_comparative(&cfg).unwrap();
        assert_eq!(rows.len(), 4); // 1 model x 2 regimes x 2 targets
        assert_eq!(summaries.len(), 1);

        let s = &summaries[0];
        assert_eq!(s.params, 120_449);
        assert_eq!(s.synthesis.thrust, (s.high_speed.thrust + s.low_speed.thrust) / 2.0);
        assert_eq!(s.synthesis.impulse, (s.high_speed.impulse + s.low_speed.impulse) / 2.0);
        assert_eq!(s.high_speed.average(), (s.high_speed.thrust + s.high_speed.impulse) / 2.0);

        let table = csv_lines(&dir.path().join("comparative.csv"));
        assert_eq!(table.len(), 2); // header + one model
        assert!(table[0].starts_with("model,params,hs_thrust_mape"));
        assert!(table[1].starts_with("penn-fcf,120449,"));
        let runs = csv_lines(&dir.path().join("comparative_runs.csv"));
        assert_eq!(runs.len(), 5);
        assert!(runs[1].starts_with("high-speed,penn-fcf,thrust,120449,"));
    }

    #[test]
    fn loss_study_default_grid_has_24_cells() {
        let cfg = LossStudyConfig::new("unused");
        let cells = cfg.sets.len() * cfg.models.len() * cfg.losses.len() * cfg.targets.len();
        assert_eq!(cells, 24);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
    }

    #[test]
    fn loss_study_aggregates_means_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = LossStudyConfig::new(dir.path());
        cfg.sets = vec![SourceKind::HighSpeed];
        cfg.models = vec![ModelKind::PennBnf];
        cfg.losses = vec![LossKind::Mse, LossKind::Mare];
        cfg.targets = vec![Target::Thrust];
        cfg.seeds = vec![1, 2];
        cfg.count = 250;
        cfg.epochs = Some(1);
        let (rows, summaries) = run_loss_study(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(summaries.len(), 2);
        for s in &summaries {
            let expected = mean(
                &rows
                    .iter()
                    .filter(|r| r.loss == s.loss)
                    .map(|r| r.mape)
                    .collect::<Vec<_>>(),
            );
            assert_eq!(s.mean_mape, expected);
            assert_eq!(s.seeds, 2);
        }
        let runs = csv_lines(&dir.path().join("loss_study_runs.csv"));
        assert_eq!(runs[0], "dataset,model,loss,target,seed,test_mape,converged");
        assert_eq!(runs.len(), 5);
        assert!(dir.path().join("loss_study_means.csv").exists());
    }

    #[test]
    fn size_study_default_factor_sets_per_regime() {
        let cfg = SizeStudyConfig::new("unused");
        assert_eq!(cfg.plans.len(), 2);
        assert_eq!(cfg.plans[0].set, SourceKind::HighSpeed);
        assert_eq!(cfg.plans[0].factors, vec![1, 5, 20, 200, 500]);
        assert_eq!(cfg.plans[1].set, SourceKind::LowSpeed);
        assert_eq!(cfg.plans[1].factors, vec![1, 5, 20, 100, 200]);
        assert_eq!(cfg.models, vec![ModelKind::MlpMul, ModelKind::PennBnf]);
    }

    #[test]
    fn size_study_reports_train_sizes_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = SizeStudyConfig::new(dir.path());
        cfg.plans = vec![SizePlan { set: SourceKind::HighSpeed, factors: vec![1, 4] }];
        cfg.models = vec![ModelKind::PennBnf];
        cfg.targets = vec![Target::Thrust];
        cfg.seeds = vec![1];
        cfg.count = 300;
        cfg.epochs = Some(1);
        let (rows, summaries) = run_size_study(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].train_size, 180);
        assert_eq!(rows[1].train_size, 45);
        assert_eq!(summaries.len(), 2);

        let lines = csv_lines(&dir.path().join("size_study_runs.csv"));
        assert!(lines[0].ends_with("converged"));
        assert!(lines[1].contains(",180,"));
        assert!(lines[1].ends_with("true") || lines[1].ends_with("false"));
    }

    #[test]
    fn scaling_study_orders_params_with_multiplier() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ScalingStudyConfig::new(dir.path());
        cfg.multipliers = vec![0.25, 0.5];
        cfg.targets = vec![Target::Thrust];
        cfg.seeds = vec![1];
        cfg.count = 250;
        cfg.epochs = Some(1);
        let (rows, summaries) = run_scaling_study(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].params < rows[1].params);
        assert_eq!(summaries[0].params, rows[0].params);
        assert!(dir.path().join("scaling_study_means.csv").exists());
    }

    #[test]
    fn timing_study_measures_positive_latency() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = TimingStudyConfig::new(dir.path());
        cfg.models = vec![ModelKind::PennCawf];
        cfg.count = 250;
        cfg.epochs = Some(1);
        cfg.inference_passes = 25;
        let (rows, hardware) = run_timing_study(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].inference_seconds > 0.0);
        assert!(rows[0].train_seconds > 0.0);
        assert!(!hardware.is_empty());

        let lines = csv_lines(&dir.path().join("timing.csv"));
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("penn-cawf,71873,"));
    }
}
