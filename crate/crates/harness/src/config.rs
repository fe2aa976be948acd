//! Run configuration.
//!
//! A run is described by a flat `key = value` file (blank lines and `#`
//! comments allowed) plus optional command-line overrides in the same
//! syntax. Defaults depend on the model family and flight regime:
//!
//! * every run: 150 epochs, 3:1:1 split, batch 100 (high-speed) / 40
//!   (low-speed);
//! * group-structured models: learning rate 2e-3 halved at epochs 60, 80
//!   and 100;
//! * MLP baselines: learning rate 1e-2 cut to a tenth at epochs 80 and 120.
//!
//! Keys are applied last-wins, so overrides simply append to the file's
//! pairs. Defaults that depend on `model` or `regime` are resolved after
//! all pairs are collected, so key order never matters.

use std::fmt;
use std::path::{Path, PathBuf};

use penn_core::models::ModelKind;
use penn_core::objectives::{LossKind, PredictionPolicy, Target, DEFAULT_MARE_EPSILON};
use penn_core::optim::{AdamConfig, LrSchedule};

use crate::generate::{GenConfig, Regime};
use crate::{Error, Result};

/// Where the records of a run come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Load an existing CSV dataset.
    Csv(PathBuf),
    /// Generate a synthetic dataset in memory.
    Synthetic(GenConfig),
    /// Full-envelope synthesis: equal-count high-speed and low-speed decks
    /// generated and merged. `noise_sd = None` keeps each regime's default.
    Pooled {
        count_each: usize,
        seed: u64,
        noise_sd: Option<f64>,
    },
}

/// The three dataset flavours the studies run on: each pure regime plus the
/// pooled full-envelope synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    HighSpeed,
    LowSpeed,
    Synthesis,
}

impl SourceKind {
    pub const ALL: [SourceKind; 3] = [
        SourceKind::HighSpeed,
        SourceKind::LowSpeed,
        SourceKind::Synthesis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SourceKind::HighSpeed => "high-speed",
            SourceKind::LowSpeed => "low-speed",
            SourceKind::Synthesis => "synthesis",
        }
    }

    pub fn parse(text: &str) -> Result<SourceKind> {
        match text.trim().to_ascii_lowercase().as_str() {
            "synthesis" | "pooled" | "both" | "syn" => Ok(SourceKind::Synthesis),
            other => Ok(match Regime::parse(other)? {
                Regime::HighSpeed => SourceKind::HighSpeed,
                Regime::LowSpeed => SourceKind::LowSpeed,
            }),
        }
    }

    /// Mini-batch default: the pooled set keeps the high-speed batch size.
    pub fn default_batch_size(self) -> usize {
        match self {
            SourceKind::LowSpeed => Regime::LowSpeed.default_batch_size(),
            _ => Regime::HighSpeed.default_batch_size(),
        }
    }

    /// Synthetic source of roughly `count` records with this flavour.
    pub fn source(self, count: usize, seed: u64) -> DataSource {
        match self {
            SourceKind::HighSpeed => {
                DataSource::Synthetic(GenConfig::new(Regime::HighSpeed, count, seed))
            }
            SourceKind::LowSpeed => {
                DataSource::Synthetic(GenConfig::new(Regime::LowSpeed, count, seed))
            }
            SourceKind::Synthesis => DataSource::Pooled {
                count_each: (count / 2).max(1),
                seed,
                noise_sd: None,
            },
        }
    }
}

/// Fully resolved description of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub target: Target,
    pub loss: LossKind,
    pub epochs: u32,
    pub batch_size: usize,
    pub initial_lr: f64,
    pub lr_milestones: Vec<u32>,
    pub lr_decay: f64,
    pub adam: AdamConfig,
    /// Seed for parameter initialisation and epoch shuffling.
    pub seed: u64,
    /// Seed for the split and the subsample draw, kept separate so data
    /// partitions can stay fixed while initialisation varies.
    pub split_seed: u64,
    pub width_multiplier: f64,
    pub subsample_factor: u32,
    pub split_weights: [f64; 3],
    pub mare_epsilon: f64,
    pub clamp_negative_thrust: bool,
    pub source: DataSource,
}

/// Per-family optimisation schedule: `(initial lr, milestones, decay)`.
pub fn family_schedule(model: ModelKind) -> (f64, Vec<u32>, f64) {
    match model {
        ModelKind::MlpRes | ModelKind::MlpMul => (0.01, vec![80, 120], 0.1),
        _ => (0.002, vec![60, 80, 100], 0.5),
    }
}

impl TrainConfig {
    /// The standard run setup for a model on one of the synthetic flavours.
    pub fn defaults(model: ModelKind, kind: SourceKind) -> TrainConfig {
        let (initial_lr, lr_milestones, lr_decay) = family_schedule(model);
        TrainConfig {
            model,
            target: Target::Thrust,
            loss: LossKind::Mare,
            epochs: 150,
            batch_size: kind.default_batch_size(),
            initial_lr,
            lr_milestones,
            lr_decay,
            adam: AdamConfig::default(),
            seed: 1,
            split_seed: 1,
            width_multiplier: 1.0,
            subsample_factor: 1,
            split_weights: [3.0, 1.0, 1.0],
            mare_epsilon: DEFAULT_MARE_EPSILON,
            clamp_negative_thrust: true,
            source: kind.source(5_000, 7),
        }
    }

    pub fn lr_schedule(&self) -> Result<LrSchedule> {
        Ok(LrSchedule::new(
            self.initial_lr,
            self.lr_milestones.clone(),
            self.lr_decay,
        )?)
    }

    pub fn policy(&self) -> PredictionPolicy {
        PredictionPolicy {
            clamp_negative_thrust: self.clamp_negative_thrust,
            drop_zero_impulse: true,
            mare_epsilon: self.mare_epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.subsample_factor == 0 {
            return Err(Error::Config("subsample_factor must be >= 1".into()));
        }
        if !(self.width_multiplier > 0.0) || !self.width_multiplier.is_finite() {
            return Err(Error::Config(format!(
                "width_multiplier must be positive, got {}",
                self.width_multiplier
            )));
        }
        if !(self.mare_epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "mare_epsilon must be >= 0, got {}",
                self.mare_epsilon
            )));
        }
        if !(self.initial_lr > 0.0) || !self.initial_lr.is_finite() {
            return Err(Error::Config(format!(
                "lr must be positive, got {}",
                self.initial_lr
            )));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay < 1.0) {
            return Err(Error::Config(format!(
                "lr_decay must be in (0, 1), got {}",
                self.lr_decay
            )));
        }
        // Remaining schedule checks ride on the constructor.
        self.lr_schedule().map_err(|e| match e {
            Error::Core(core) => Error::Config(core.to_string()),
            other => other,
        })?;
        match &self.source {
            DataSource::Synthetic(gen) => {
                if gen.count == 0 {
                    return Err(Error::Config("gen_count must be positive".into()));
                }
                if !gen.noise_sd.is_finite() || gen.noise_sd < 0.0 {
                    return Err(Error::Config(format!(
                        "noise_sd must be >= 0, got {}",
                        gen.noise_sd
                    )));
                }
            }
            DataSource::Pooled {
                count_each,
                noise_sd,
                ..
            } => {
                if *count_each == 0 {
                    return Err(Error::Config("gen_count must be positive".into()));
                }
                if let Some(sd) = noise_sd {
                    if !sd.is_finite() || *sd < 0.0 {
                        return Err(Error::Config(format!(
                            "noise_sd must be >= 0, got {sd}"
                        )));
                    }
                }
            }
            DataSource::Csv(_) => {}
        }
        Ok(())
    }

    /// Parse a config file and apply `overrides` (each `key=value`) on top.
    pub fn from_file(path: &Path, overrides: &[String]) -> Result<TrainConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = parse_pairs(&text)?;
        for (line, item) in overrides.iter().enumerate() {
            pairs.push(split_pair(item).ok_or_else(|| {
                Error::Config(format!("override {} is not key=value: {item:?}", line + 1))
            })?);
        }
        TrainConfig::from_pairs(pairs)
    }

    /// Build a config from raw overrides only (no file).
    pub fn from_overrides(overrides: &[String]) -> Result<TrainConfig> {
        let mut pairs = Vec::new();
        for item in overrides {
            pairs.push(split_pair(item).ok_or_else(|| {
                Error::Config(format!("override is not key=value: {item:?}"))
            })?);
        }
        TrainConfig::from_pairs(pairs)
    }

    /// Resolve a list of `(key, value)` pairs, last occurrence winning.
    pub fn from_pairs(pairs: Vec<(String, String)>) -> Result<TrainConfig> {
        let mut raw = RawConfig::default();
        for (key, value) in &pairs {
            raw.set(key, value)?;
        }

        let model = raw
            .model
            .ok_or_else(|| Error::Config("missing required key: model".into()))?;
        let has_generator = raw.regime.is_some()
            || raw.gen_count.is_some()
            || raw.gen_seed.is_some()
            || raw.noise_sd.is_some();
        if raw.data.is_none() && !has_generator {
            return Err(Error::Config(
                "no dataset source: set data=<csv> or a generator (regime=, gen_count=, gen_seed=, noise_sd=)"
                    .into(),
            ));
        }
        let kind = raw.regime.unwrap_or(SourceKind::HighSpeed);
        let mut config = TrainConfig::defaults(model, kind);

        if let Some(v) = raw.target {
            config.target = v;
        }
        if let Some(v) = raw.loss {
            config.loss = v;
        }
        if let Some(v) = raw.epochs {
            config.epochs = v;
        }
        if let Some(v) = raw.batch_size {
            config.batch_size = v;
        }
        if let Some(v) = raw.lr {
            config.initial_lr = v;
        }
        if let Some(v) = raw.lr_milestones {
            config.lr_milestones = v;
        }
        if let Some(v) = raw.lr_decay {
            config.lr_decay = v;
        }
        if let Some(v) = raw.seed {
            config.seed = v;
        }
        if let Some(v) = raw.split_seed {
            config.split_seed = v;
        }
        if let Some(v) = raw.width_multiplier {
            config.width_multiplier = v;
        }
        if let Some(v) = raw.subsample_factor {
            config.subsample_factor = v;
        }
        if let Some(v) = raw.split_weights {
            config.split_weights = v;
        }
        if let Some(v) = raw.mare_epsilon {
            config.mare_epsilon = v;
        }
        if let Some(v) = raw.clamp_negative_thrust {
            config.clamp_negative_thrust = v;
        }

        if let Some(path) = raw.data {
            for (key, given) in [
                ("gen_count", raw.gen_count.is_some()),
                ("gen_seed", raw.gen_seed.is_some()),
                ("noise_sd", raw.noise_sd.is_some()),
            ] {
                if given {
                    return Err(Error::Config(format!(
                        "{key} conflicts with data=: the dataset comes from a file"
                    )));
                }
            }
            config.source = DataSource::Csv(path);
        } else {
            match kind {
                SourceKind::Synthesis => {
                    config.source = DataSource::Pooled {
                        // gen_count means total records, as for pure regimes.
                        count_each: raw.gen_count.map_or(2_500, |v| (v / 2).max(1)),
                        seed: raw.gen_seed.unwrap_or(7),
                        noise_sd: raw.noise_sd,
                    };
                }
                pure => {
                    let regime = match pure {
                        SourceKind::LowSpeed => Regime::LowSpeed,
                        _ => Regime::HighSpeed,
                    };
                    let mut gen = GenConfig::new(regime, 5_000, 7);
                    if let Some(v) = raw.gen_count {
                        gen.count = v;
                    }
                    if let Some(v) = raw.gen_seed {
                        gen.seed = v;
                    }
                    if let Some(v) = raw.noise_sd {
                        gen.noise_sd = v;
                    }
                    config.source = DataSource::Synthetic(gen);
                }
            }
        }

        config.validate()?;
        Ok(config)
    }

    /// Flavour of the synthetic source, if the data is generated.
    pub fn source_kind(&self) -> Option<SourceKind> {
        match &self.source {
            DataSource::Synthetic(gen) => Some(match gen.regime {
                Regime::HighSpeed => SourceKind::HighSpeed,
                Regime::LowSpeed => SourceKind::LowSpeed,
            }),
            DataSource::Pooled { .. } => Some(SourceKind::Synthesis),
            DataSource::Csv(_) => None,
        }
    }
}

impl fmt::Display for TrainConfig {
    /// Canonical `key = value` rendering; parseable by [`parse_pairs`], so
    /// a run can echo its exact resolved configuration to disk.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model = {}", self.model.name())?;
        match &self.source {
            DataSource::Synthetic(gen) => {
                writeln!(f, "regime = {}", gen.regime.tag())?;
                writeln!(f, "gen_count = {}", gen.count)?;
                writeln!(f, "gen_seed = {}", gen.seed)?;
                writeln!(f, "noise_sd = {}", gen.noise_sd)?;
            }
            DataSource::Pooled {
                count_each,
                seed,
                noise_sd,
            } => {
                writeln!(f, "regime = synthesis")?;
                writeln!(f, "gen_count = {}", count_each * 2)?;
                writeln!(f, "gen_seed = {seed}")?;
                if let Some(sd) = noise_sd {
                    writeln!(f, "noise_sd = {sd}")?;
                }
            }
            DataSource::Csv(path) => {
                writeln!(f, "data = {}", path.display())?;
            }
        }
        writeln!(f, "target = {}", self.target.name())?;
        writeln!(f, "loss = {}", self.loss.name())?;
        writeln!(f, "epochs = {}", self.epochs)?;
        writeln!(f, "batch_size = {}", self.batch_size)?;
        writeln!(f, "lr = {}", self.initial_lr)?;
        let milestones: Vec<String> =
            self.lr_milestones.iter().map(|m| m.to_string()).collect();
        writeln!(f, "lr_milestones = {}", milestones.join(","))?;
        writeln!(f, "lr_decay = {}", self.lr_decay)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "split_seed = {}", self.split_seed)?;
        writeln!(f, "width_multiplier = {}", self.width_multiplier)?;
        writeln!(f, "subsample_factor = {}", self.subsample_factor)?;
        writeln!(
            f,
            "split_weights = {},{},{}",
            self.split_weights[0], self.split_weights[1], self.split_weights[2]
        )?;
        writeln!(f, "mare_epsilon = {}", self.mare_epsilon)?;
        writeln!(f, "clamp_negative_thrust = {}", self.clamp_negative_thrust)
    }
}

/// Keys accepted by the parser, for error messages.
const KNOWN_KEYS: [&str; 19] = [
    "model",
    "regime",
    "target",
    "loss",
    "epochs",
    "batch_size",
    "lr",
    "lr_milestones",
    "lr_decay",
    "seed",
    "split_seed",
    "width_multiplier",
    "subsample_factor",
    "split_weights",
    "mare_epsilon",
    "clamp_negative_thrust",
    "data",
    "gen_count",
    "gen_seed",
];
// noise_sd is also accepted; it shares GenConfig with gen_count/gen_seed.

#[derive(Default)]
struct RawConfig {
    model: Option<ModelKind>,
    regime: Option<SourceKind>,
    target: Option<Target>,
    loss: Option<LossKind>,
    epochs: Option<u32>,
    batch_size: Option<usize>,
    lr: Option<f64>,
    lr_milestones: Option<Vec<u32>>,
    lr_decay: Option<f64>,
    seed: Option<u64>,
    split_seed: Option<u64>,
    width_multiplier: Option<f64>,
    subsample_factor: Option<u32>,
    split_weights: Option<[f64; 3]>,
    mare_epsilon: Option<f64>,
    clamp_negative_thrust: Option<bool>,
    data: Option<PathBuf>,
    gen_count: Option<usize>,
    gen_seed: Option<u64>,
    noise_sd: Option<f64>,
}

impl RawConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{key}: {what}: {value:?}"));
        match key {
            "model" => {
                self.model = Some(
                    ModelKind::parse(value).ok_or_else(|| bad("unknown model"))?,
                )
            }
            "regime" => self.regime = Some(SourceKind::parse(value)?),
            "target" => {
                self.target =
                    Some(Target::parse(value).ok_or_else(|| bad("unknown target"))?)
            }
            "loss" => {
                self.loss = Some(LossKind::parse(value).ok_or_else(|| bad("unknown loss"))?)
            }
            "epochs" => self.epochs = Some(parse_num(key, value)?),
            "batch_size" => self.batch_size = Some(parse_num(key, value)?),
            "lr" => self.lr = Some(parse_num(key, value)?),
            "lr_milestones" => self.lr_milestones = Some(parse_list(key, value)?),
            "lr_decay" => self.lr_decay = Some(parse_num(key, value)?),
            "seed" => self.seed = Some(parse_num(key, value)?),
            "split_seed" => self.split_seed = Some(parse_num(key, value)?),
            "width_multiplier" => self.width_multiplier = Some(parse_num(key, value)?),
            "subsample_factor" => self.subsample_factor = Some(parse_num(key, value)?),
            "split_weights" => {
                let parts: Vec<f64> = parse_list(key, value)?;
                if parts.len() != 3 {
                    return Err(bad("expected three comma-separated weights"));
                }
                self.split_weights = Some([parts[0], parts[1], parts[2]]);
            }
            "mare_epsilon" => self.mare_epsilon = Some(parse_num(key, value)?),
            "clamp_negative_thrust" => {
                self.clamp_negative_thrust = Some(match value.to_ascii_lowercase().as_str() {
                    "true" | "yes" | "1" => true,
                    "false" | "no" | "0" => false,
                    _ => return Err(bad("expected true or false")),
                })
            }
            "data" => self.data = Some(PathBuf::from(value)),
            "gen_count" => self.gen_count = Some(parse_num(key, value)?),
            "gen_seed" => self.gen_seed = Some(parse_num(key, value)?),
            "noise_sd" => self.noise_sd = Some(parse_num(key, value)?),
            other => {
                return Err(Error::Config(format!(
                    "unknown key {other:?}; known keys: {}, noise_sd",
                    KNOWN_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|part| parse_num(key, part.trim()))
        .collect()
}

fn split_pair(line: &str) -> Option<(String, String)> {
    let (key, value) = line.split_once('=')?;
    let key = key.trim();
    if key.is_empty() {
        return None;
    }
    Some((key.to_string(), value.trim().to_string()))
}

/// Parse `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = match raw_line.split_once('#') {
            Some((before, _)) => before,
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let pair = split_pair(line).ok_or_else(|| {
            Error::Config(format!("line {}: expected key = value, got {raw_line:?}", i + 1))
        })?;
        pairs.push(pair);
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(text: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, text).unwrap();
        (dir, path)
    }

    #[test]
    fn group_model_defaults_follow_the_standard_setup() {
        let c = TrainConfig::defaults(ModelKind::PennBnf, SourceKind::HighSpeed);
        assert_eq!(c.epochs, 150);
        assert_eq!(c.batch_size, 100);
        assert_eq!(c.initial_lr, 0.002);
        assert_eq!(c.lr_milestones, vec![60, 80, 100]);
        assert_eq!(c.lr_decay, 0.5);
        assert_eq!(c.split_weights, [3.0, 1.0, 1.0]);

        let c = TrainConfig::defaults(ModelKind::MlpRes, SourceKind::LowSpeed);
        assert_eq!(c.batch_size, 40);
        assert_eq!(c.initial_lr, 0.01);
        assert_eq!(c.lr_milestones, vec![80, 120]);
        assert_eq!(c.lr_decay, 0.1);
    }

    #[test]
    fn file_with_comments_parses_and_overrides_win() {
        let (_dir, path) = write_config(
            "# experiment run\n\
             model = penn-cawf\n\
             regime = ls   # low speed\n\
             \n\
             epochs = 12\n\
             lr = 0.004\n",
        );
        let c = TrainConfig::from_file(&path, &["epochs=7".into()]).unwrap();
        assert_eq!(c.model, ModelKind::PennCawf);
        assert_eq!(c.epochs, 7); // override wins over the file
        assert_eq!(c.initial_lr, 0.004);
        assert_eq!(c.batch_size, 40); // regime default survived
        match c.source {
            DataSource::Synthetic(gen) => assert_eq!(gen.regime, Regime::LowSpeed),
            other => panic!("expected synthetic source, got {other:?}"),
        }
    }

    #[test]
    fn defaults_resolve_after_all_keys_regardless_of_order() {
        // batch_size default depends on regime, which appears later.
        let c = TrainConfig::from_pairs(vec![
            ("model".into(), "mlp-mul".into()),
            ("regime".into(), "ls".into()),
        ])
        .unwrap();
        assert_eq!(c.batch_size, 40);

        let c = TrainConfig::from_pairs(vec![
            ("batch_size".into(), "64".into()),
            ("regime".into(), "ls".into()),
            ("model".into(), "mlp-mul".into()),
        ])
        .unwrap();
        assert_eq!(c.batch_size, 64);
    }

    #[test]
    fn missing_model_and_unknown_keys_are_usage_errors() {
        let err = TrainConfig::from_pairs(vec![]).unwrap_err();
        assert!(err.is_usage(), "{err}");
        assert!(err.to_string().contains("model"));

        let err = TrainConfig::from_pairs(vec![
            ("model".into(), "penn-bnf".into()),
            ("leraning_rate".into(), "0.1".into()),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
    }

    #[test]
    fn csv_source_conflicts_with_generator_keys() {
        let err = TrainConfig::from_pairs(vec![
            ("model".into(), "penn-bnf".into()),
            ("data".into(), "deck.csv".into()),
            ("gen_count".into(), "100".into()),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("conflicts"), "{err}");

        let ok = TrainConfig::from_pairs(vec![
            ("model".into(), "penn-bnf".into()),
            ("data".into(), "deck.csv".into()),
        ])
        .unwrap();
        assert_eq!(ok.source, DataSource::Csv(PathBuf::from("deck.csv")));
    }

    #[test]
    fn milestones_parse_including_empty() {
        let c = TrainConfig::from_pairs(vec![
            ("model".into(), "penn-abf".into()),
            ("regime".into(), "hs".into()),
            ("lr_milestones".into(), "10, 20,30".into()),
        ])
        .unwrap();
        assert_eq!(c.lr_milestones, vec![10, 20, 30]);

        let c = TrainConfig::from_pairs(vec![
            ("model".into(), "penn-abf".into()),
            ("regime".into(), "hs".into()),
            ("lr_milestones".into(), "".into()),
        ])
        .unwrap();
        assert!(c.lr_milestones.is_empty());
    }

    #[test]
    fn missing_dataset_source_is_a_usage_error() {
        let err = TrainConfig::from_pairs(vec![("model".into(), "penn-bnf".into())])
            .unwrap_err();
        assert!(err.is_usage(), "{err}");
        assert!(err.to_string().contains("dataset source"), "{err}");

        // Any generator key (or data=) names a source.
        assert!(TrainConfig::from_pairs(vec![
            ("model".into(), "penn-bnf".into()),
            ("gen_count".into(), "500".into()),
        ])
        .is_ok());
    }

    #[test]
    fn bad_values_are_rejected_with_the_key_name() {
        for (key, value) in [
            ("epochs", "0"),
            ("epochs", "abc"),
            ("lr", "-0.5"),
            ("lr_decay", "1.5"),
            ("split_weights", "1,2"),
            ("clamp_negative_thrust", "maybe"),
            ("subsample_factor", "0"),
            ("noise_sd", "-1"),
        ] {
            let err = TrainConfig::from_pairs(vec![
                ("model".into(), "penn-fcf".into()),
                ("regime".into(), "hs".into()),
                (key.into(), value.into()),
            ])
            .unwrap_err();
            assert!(err.is_usage(), "{key}={value} should be usage error: {err}");
            assert!(err.to_string().contains(key), "{key}={value}: {err}");
        }
    }

    #[test]
    fn display_round_trips_through_the_parser() {
        let mut c = TrainConfig::defaults(ModelKind::PennAbf, SourceKind::LowSpeed);
        c.epochs = 33;
        c.lr_milestones = vec![5, 9];
        c.subsample_factor = 4;
        c.target = Target::SpecificImpulse;
        let text = c.to_string();
        let parsed = TrainConfig::from_pairs(parse_pairs(&text).unwrap()).unwrap();
        assert_eq!(parsed, c);
    }
}
