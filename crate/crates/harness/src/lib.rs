//! Hosting layer around [`penn_core`]: synthetic data generation, CSV and
//! checkpoint IO, the training loop, and the experiment runners behind the
//! `penn` binary.
//!
//! The crate is organised bottom-up:
//!
//! * [`schema`] — the canonical 20-column record layout shared by every file
//!   this crate reads or writes.
//! * [`generate`] — a deterministic surrogate of a combined-cycle engine deck
//!   that produces records in that layout for two flight regimes.
//! * [`data`] — CSV IO, splitting, normalisation and subsampling.
//! * [`checkpoint`] — a self-describing binary format for trained models.
//! * [`config`] — flat `key = value` run configuration with regime defaults.
//! * [`train`] — the Adam training loop with best-validation selection.
//! * [`experiments`] — the five study runners (comparative table, loss
//!   ablation, dataset-size sweep, width-scaling sweep, timing table).

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod experiments;
pub mod generate;
pub mod schema;
pub mod train;

use std::path::PathBuf;

/// Errors produced by the hosting layer. Core numerical errors are wrapped
/// rather than flattened so callers can still match on them.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] penn_core::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header column {position} should be {expected:?}, found {found:?}")]
    HeaderMismatch {
        position: usize,
        expected: &'static str,
        found: String,
    },
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from user-supplied arguments or files rather
    /// than from the computation itself; the CLI maps these to exit code 2.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Invalid(_)
                | Error::HeaderMismatch { .. }
                | Error::BadRow { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Mixes a base seed with a stream index into an independent 64-bit seed.
///
/// SplitMix64 finalisation: consecutive indices land in statistically
/// unrelated states, so per-sample and per-epoch generators can be derived
/// from one run seed without coupling.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(stream)
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
