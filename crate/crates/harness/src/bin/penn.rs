//! Command-line surface of the harness.
//!
//! ```text
//! penn gen-data --regime hs --count 5000 --out deck.csv
//! penn train --set model=penn-bnf --set regime=hs --out-dir runs/bnf
//! penn eval --checkpoint runs/bnf/model.ckpt --data deck.csv
//! penn count-params --all
//! penn experiment comparative --out-dir runs/comparative
//! penn bench --checkpoint runs/bnf/model.ckpt --data deck.csv
//! ```
//!
//! Exit codes: 0 on success, 2 on usage errors (unknown keys, bad values,
//! missing dataset source), 1 on runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use penn_core::models::{ModelKind, ModelSpec};
use penn_core::objectives::{PredictionPolicy, DEFAULT_MARE_EPSILON};
use penn_harness::checkpoint::Checkpoint;
use penn_harness::config::TrainConfig;
use penn_harness::experiments::{
    self, ComparativeConfig, LossStudyConfig, ScalingStudyConfig, SizeStudyConfig,
    TimingStudyConfig,
};
use penn_harness::generate::{self, GenConfig, Regime};
use penn_harness::{data, train, Error, Result};

#[derive(Parser)]
#[command(
    name = "penn",
    version,
    about = "Train and study station-partitioned aeroengine performance models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic bench deck and write it as CSV.
    GenData(GenDataArgs),
    /// Train one model from a config file and/or key=value overrides.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a CSV dataset.
    Eval(EvalArgs),
    /// Print exact trainable-parameter counts.
    CountParams(CountParamsArgs),
    /// Run one of the scripted studies.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Measure single-sample inference latency of a checkpoint.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Flight regime: hs (high-speed) or ls (low-speed).
    #[arg(long)]
    regime: String,
    /// Number of records to generate.
    #[arg(long)]
    count: usize,
    /// Multiplicative target-noise standard deviation (defaults per regime).
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Config file of `key = value` lines, same keys as the config.txt a
    /// run echoes (model, regime, target, loss, epochs, ...).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override or set one config key, e.g. --set epochs=20. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Where to write model.ckpt, history.csv, report.csv and config.txt
    /// (default: $PENN_OUT_DIR or ./runs).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// CSV dataset to evaluate against.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct CountParamsArgs {
    /// Model kind, e.g. penn-bnf or mlp-res.
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    model: Option<String>,
    /// Hidden-width multiplier applied before counting.
    #[arg(long, default_value_t = 1.0)]
    width_multiplier: f64,
    /// Print the whole model-kind table.
    #[arg(long)]
    all: bool,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Every model kind on both regimes and both targets.
    Comparative(ExpFlags),
    /// MSE/MAE/MARE ablation on MLP-Mul and PENN-BNF.
    Loss(ExpFlags),
    /// Error as the training split shrinks by subsample factors.
    Size(SizeFlags),
    /// The PENN-BNF width family.
    Scaling(ScalingFlags),
    /// Training wall time and inference latency per model kind.
    Timing(TimingFlags),
}

#[derive(Args)]
struct ExpFlags {
    /// Output directory (default: $PENN_OUT_DIR or ./runs).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Records per generated deck.
    #[arg(long)]
    count: Option<usize>,
    /// Override the standard 150 epochs (smoke runs).
    #[arg(long)]
    epochs: Option<u32>,
    /// Comma-separated seeds; single-seed studies use the first.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

#[derive(Args)]
struct SizeFlags {
    #[command(flatten)]
    common: ExpFlags,
    /// Comma-separated subsample factors, applied to both regimes.
    #[arg(long, value_delimiter = ',')]
    factors: Option<Vec<u32>>,
}

#[derive(Args)]
struct ScalingFlags {
    #[command(flatten)]
    common: ExpFlags,
    /// Comma-separated width multipliers.
    #[arg(long, value_delimiter = ',')]
    multipliers: Option<Vec<f64>>,
}

#[derive(Args)]
struct TimingFlags {
    #[command(flatten)]
    common: ExpFlags,
    /// Forward passes averaged for the latency figure.
    #[arg(long)]
    passes: Option<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData(args) => gen_data(args),
        Command::Train(args) => train_cmd(args),
        Command::Eval(args) => eval_cmd(args),
        Command::CountParams(args) => count_params(args),
        Command::Experiment(which) => experiment(which),
        Command::Bench(args) => bench(args),
    }
}

fn out_dir_or_default(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("PENN_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn write_csv_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn default_policy() -> PredictionPolicy {
    PredictionPolicy {
        clamp_negative_thrust: true,
        drop_zero_impulse: true,
        mare_epsilon: DEFAULT_MARE_EPSILON,
    }
}

fn gen_data(args: GenDataArgs) -> Result<()> {
    let regime = Regime::parse(&args.regime)?;
    let mut gen = GenConfig::new(regime, args.count, args.seed);
    if let Some(sd) = args.noise_sd {
        gen.noise_sd = sd;
    }
    gen.validate()?;
    let records = generate::generate(&gen)?;
    data::write_csv(&args.out, &records)?;
    println!(
        "wrote {} {} records to {}",
        records.len(),
        regime.name(),
        args.out.display()
    );
    Ok(())
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => TrainConfig::from_file(path, &args.set)?,
        None => TrainConfig::from_overrides(&args.set)?,
    };
    let out_dir = out_dir_or_default(args.out_dir);
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let outcome = train::train(&config)?;
    if let Some(epoch) = outcome.diverged_at {
        eprintln!(
            "warning: loss became non-finite in epoch {epoch}; \
             metrics reflect the best checkpoint before that"
        );
    }

    // Latency probe on a fresh record from the same source; 1,000 passes is
    // plenty for the per-run report (`penn bench` does the careful job).
    let (records, _) = train::load_records(&config.source)?;
    let latency = train::mean_inference_seconds(
        outcome.model.as_ref(),
        &outcome.stats,
        &records[0],
        config.target,
        &config.policy(),
        1_000,
    )?;

    let history_rows: Vec<Vec<String>> = outcome
        .history
        .iter()
        .map(|h| {
            vec![
                h.epoch.to_string(),
                format!("{}", h.lr),
                format!("{}", h.train_loss),
                format!("{}", h.val_mape),
            ]
        })
        .collect();
    write_csv_rows(
        &out_dir.join("history.csv"),
        &["epoch", "lr", "train_loss", "val_mape"],
        &history_rows,
    )?;

    let m = &outcome.test_metrics;
    write_csv_rows(
        &out_dir.join("report.csv"),
        &[
            "model",
            "target",
            "params",
            "seed",
            "split_seed",
            "best_epoch",
            "best_val_mape",
            "test_mape",
            "test_mare",
            "test_mae",
            "test_mse",
            "train_size",
            "val_size",
            "test_size",
            "dropped_zero_impulse",
            "converged",
            "train_seconds",
            "inference_seconds",
        ],
        &[vec![
            config.model.name().to_string(),
            config.target.name().to_string(),
            outcome.param_count.to_string(),
            config.seed.to_string(),
            config.split_seed.to_string(),
            outcome.best_epoch.to_string(),
            format!("{}", outcome.best_val_mape),
            format!("{}", m.mape),
            format!("{}", m.mare),
            format!("{}", m.mae),
            format!("{}", m.mse),
            outcome.train_size.to_string(),
            outcome.val_size.to_string(),
            outcome.test_size.to_string(),
            outcome.dropped_zero_impulse.to_string(),
            outcome.converged().to_string(),
            format!("{}", outcome.train_seconds),
            format!("{latency}"),
        ]],
    )?;

    let config_path = out_dir.join("config.txt");
    std::fs::write(&config_path, config.to_string()).map_err(|e| Error::io(&config_path, e))?;

    println!(
        "model {} ({} params), target {}",
        config.model.name(),
        outcome.param_count,
        config.target.name()
    );
    println!(
        "splits train/val/test: {}/{}/{} ({} zero-impulse rows dropped)",
        outcome.train_size, outcome.val_size, outcome.test_size, outcome.dropped_zero_impulse
    );
    println!(
        "best epoch {} (validation MAPE {:.3}%)",
        outcome.best_epoch, outcome.best_val_mape
    );
    println!(
        "test MAPE {:.3}%  MARE {:.5}  MAE {:.4}  MSE {:.4}",
        m.mape, m.mare, m.mae, m.mse
    );
    println!(
        "trained in {:.1}s; mean inference {:.1}us/sample",
        outcome.train_seconds,
        latency * 1e6
    );

    let ckpt_path = out_dir.join("model.ckpt");
    outcome.into_checkpoint().save(&ckpt_path)?;
    println!(
        "wrote {}, history.csv, report.csv, config.txt in {}",
        ckpt_path.display(),
        out_dir.display()
    );
    Ok(())
}

fn eval_cmd(args: EvalArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let report = data::load_csv(&args.data)?;
    let metrics = train::evaluate_model(
        ckpt.model.as_ref(),
        &ckpt.stats,
        &report.records,
        ckpt.target,
        &default_policy(),
    )?;
    println!(
        "checkpoint {} ({} params), target {}",
        ckpt.spec.kind.name(),
        ckpt.model.param_count(),
        ckpt.target.name()
    );
    println!(
        "dataset {}: {} records ({} zero-impulse rows dropped)",
        args.data.display(),
        report.records.len(),
        report.dropped_zero_impulse
    );
    println!(
        "MAPE {:.3}%  MARE {:.5}  MAE {:.4}  MSE {:.4}",
        metrics.mape, metrics.mare, metrics.mae, metrics.mse
    );
    Ok(())
}

fn count_params(args: CountParamsArgs) -> Result<()> {
    if args.all {
        for kind in ModelKind::ALL {
            let params = ModelSpec::new(kind)
                .with_width_multiplier(args.width_multiplier)
                .param_count();
            println!("{} {}", kind.name(), params);
        }
        return Ok(());
    }
    let name = args.model.expect("clap enforces --model unless --all");
    let kind = ModelKind::parse(&name)
        .ok_or_else(|| Error::Invalid(format!("unknown model {name:?}")))?;
    let params = ModelSpec::new(kind)
        .with_width_multiplier(args.width_multiplier)
        .param_count();
    println!("{params}");
    Ok(())
}

fn experiment(which: ExperimentCommand) -> Result<()> {
    match which {
        ExperimentCommand::Comparative(flags) => {
            let mut cfg = ComparativeConfig::new(out_dir_or_default(flags.out_dir));
            if let Some(count) = flags.count {
                cfg.count = count;
            }
            cfg.epochs = flags.epochs.or(cfg.epochs);
            if let Some(seeds) = flags.seeds {
                cfg.seed = seeds[0];
            }
            let (rows, _) = experiments::run_comparative(&cfg)?;
            println!(
                "comparative study: {} runs -> {}",
                rows.len(),
                cfg.out_dir.join("comparative.csv").display()
            );
        }
        ExperimentCommand::Loss(flags) => {
            let mut cfg = LossStudyConfig::new(out_dir_or_default(flags.out_dir));
            if let Some(count) = flags.count {
                cfg.count = count;
            }
            cfg.epochs = flags.epochs.or(cfg.epochs);
            if let Some(seeds) = flags.seeds {
                cfg.seeds = seeds;
            }
            let (rows, _) = experiments::run_loss_study(&cfg)?;
            println!(
                "loss study: {} runs -> {}",
                rows.len(),
                cfg.out_dir.join("loss_study_means.csv").display()
            );
        }
        ExperimentCommand::Size(flags) => {
            let mut cfg = SizeStudyConfig::new(out_dir_or_default(flags.common.out_dir));
            if let Some(count) = flags.common.count {
                cfg.count = count;
            }
            cfg.epochs = flags.common.epochs.or(cfg.epochs);
            if let Some(seeds) = flags.common.seeds {
                cfg.seeds = seeds;
            }
            if let Some(factors) = flags.factors {
                for plan in &mut cfg.plans {
                    plan.factors = factors.clone();
                }
            }
            let (rows, _) = experiments::run_size_study(&cfg)?;
            println!(
                "size study: {} runs -> {}",
                rows.len(),
                cfg.out_dir.join("size_study_means.csv").display()
            );
        }
        ExperimentCommand::Scaling(flags) => {
            let mut cfg = ScalingStudyConfig::new(out_dir_or_default(flags.common.out_dir));
            if let Some(count) = flags.common.count {
                cfg.count = count;
            }
            cfg.epochs = flags.common.epochs.or(cfg.epochs);
            if let Some(seeds) = flags.common.seeds {
                cfg.seeds = seeds;
            }
            if let Some(multipliers) = flags.multipliers {
                cfg.multipliers = multipliers;
            }
            let (rows, _) = experiments::run_scaling_study(&cfg)?;
            println!(
                "scaling study: {} runs -> {}",
                rows.len(),
                cfg.out_dir.join("scaling_study_means.csv").display()
            );
        }
        ExperimentCommand::Timing(flags) => {
            let mut cfg = TimingStudyConfig::new(out_dir_or_default(flags.common.out_dir));
            if let Some(count) = flags.common.count {
                cfg.count = count;
            }
            cfg.epochs = flags.common.epochs.or(cfg.epochs);
            if let Some(seeds) = flags.common.seeds {
                cfg.seed = seeds[0];
            }
            if let Some(passes) = flags.passes {
                cfg.inference_passes = passes;
            }
            let (rows, hardware) = experiments::run_timing_study(&cfg)?;
            println!("timing study on {hardware}");
            println!(
                "{} models -> {}",
                rows.len(),
                cfg.out_dir.join("timing.csv").display()
            );
        }
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let report = data::load_csv(&args.data)?;
    let latency = train::mean_inference_seconds(
        ckpt.model.as_ref(),
        &ckpt.stats,
        &report.records[0],
        ckpt.target,
        &default_policy(),
        args.passes,
    )?;
    println!("hardware: {}", experiments::hardware_description());
    println!(
        "{} ({} params): {:.2}us mean over {} single-sample passes",
        ckpt.spec.kind.name(),
        ckpt.model.param_count(),
        latency * 1e6,
        args.passes
    );
    Ok(())
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// CSV dataset providing the probe sample.
    #[arg(long)]
    data: PathBuf,
    /// Forward passes to average.
    #[arg(long, default_value_t = 10_000)]
    passes: u32,
}
