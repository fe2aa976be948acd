//! Dataset IO and preparation: CSV reading/writing against the canonical
//! header, train/validation/test splitting, input normalisation and
//! training-set subsampling.

use std::path::Path;

use penn_core::objectives::Target;
use penn_core::Tensor;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::schema::{SampleRecord, COLUMN_NAMES, INPUT_COLUMNS, TOTAL_COLUMNS};
use crate::{Error, Result};

/// Result of loading a CSV file. Rows whose specific impulse is recorded as
/// zero describe stalled operating points where the quantity is undefined;
/// they are removed here, and the count is reported so callers can log it.
#[derive(Debug)]
pub struct LoadReport {
    pub records: Vec<SampleRecord>,
    pub dropped_zero_impulse: usize,
}

/// Removes records with `specific_impulse == 0`, returning the survivors
/// and the number removed.
pub fn drop_zero_impulse(records: Vec<SampleRecord>) -> (Vec<SampleRecord>, usize) {
    let before = records.len();
    let kept: Vec<SampleRecord> = records
        .into_iter()
        .filter(|r| r.specific_impulse != 0.0)
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

/// Reads a dataset, enforcing the exact canonical header and validating
/// every row. Zero-impulse rows are dropped (see [`LoadReport`]).
pub fn load_csv(path: &Path) -> Result<LoadReport> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                Error::io(path, std::io::Error::other(e.to_string()))
            }
            _ => Error::Csv(e),
        })?;

    let headers = reader.headers()?.clone();
    if headers.len() != TOTAL_COLUMNS {
        return Err(Error::HeaderMismatch {
            position: headers.len().min(TOTAL_COLUMNS),
            expected: COLUMN_NAMES.get(headers.len()).copied().unwrap_or(""),
            found: format!("{} columns", headers.len()),
        });
    }
    for (position, expected) in COLUMN_NAMES.iter().enumerate() {
        let found = &headers[position];
        if found != *expected {
            return Err(Error::HeaderMismatch {
                position,
                expected,
                found: found.to_string(),
            });
        }
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        // Row numbers are 1-based and count the header line.
        let row_number = i + 2;
        let row = row?;
        if row.len() != TOTAL_COLUMNS {
            return Err(Error::BadRow {
                row: row_number,
                message: format!("expected {TOTAL_COLUMNS} fields, found {}", row.len()),
            });
        }
        let mut values = [0.0; TOTAL_COLUMNS];
        for (j, field) in row.iter().enumerate() {
            values[j] = field.parse::<f64>().map_err(|_| Error::BadRow {
                row: row_number,
                message: format!("column {} ({}) is not a number: {field:?}", j, COLUMN_NAMES[j]),
            })?;
        }
        let record = SampleRecord::from_row(&values);
        if let Err((col, why)) = record.validate() {
            return Err(Error::BadRow {
                row: row_number,
                message: format!("column {} ({}): {why}", col, COLUMN_NAMES[col]),
            });
        }
        records.push(record);
    }

    let (records, dropped_zero_impulse) = drop_zero_impulse(records);
    if records.is_empty() {
        return Err(Error::Invalid(format!(
            "{} contains no usable records",
            path.display()
        )));
    }
    Ok(LoadReport {
        records,
        dropped_zero_impulse,
    })
}

/// Writes records under the canonical header. Values are formatted with the
/// shortest decimal representation that parses back to the same `f64`, so a
/// write/load cycle is lossless.
pub fn write_csv(path: &Path, records: &[SampleRecord]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(COLUMN_NAMES)?;
    let mut fields: Vec<String> = Vec::with_capacity(TOTAL_COLUMNS);
    for record in records {
        fields.clear();
        fields.extend(record.to_row().iter().map(|v| format!("{v}")));
        writer.write_record(&*fields)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// A train/validation/test partition of a dataset.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Vec<SampleRecord>,
    pub val: Vec<SampleRecord>,
    pub test: Vec<SampleRecord>,
}

/// Splits records into train/validation/test by weight.
///
/// Records are shuffled with a generator seeded by `seed`, then the train
/// and validation sizes are `floor(n * w / total)` and the test set takes
/// the remainder — the conventional 3:1:1 split of 50 000 records is exactly
/// 30 000 / 10 000 / 10 000. Every part must end up non-empty.
pub fn split(records: &[SampleRecord], weights: [f64; 3], seed: u64) -> Result<Split> {
    for w in weights {
        if !w.is_finite() || w <= 0.0 {
            return Err(Error::Invalid(format!(
                "split weights must be positive, got {weights:?}"
            )));
        }
    }
    let total: f64 = weights.iter().sum();
    let n = records.len();
    let n_train = (n as f64 * weights[0] / total).floor() as usize;
    let n_val = (n as f64 * weights[1] / total).floor() as usize;
    let n_test = n - n_train - n_val;
    if n_train == 0 || n_val == 0 || n_test == 0 {
        return Err(Error::Invalid(format!(
            "split of {n} records by {weights:?} leaves an empty part \
             ({n_train}/{n_val}/{n_test})"
        )));
    }

    let mut shuffled: Vec<SampleRecord> = records.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let test = shuffled.split_off(n_train + n_val);
    let mut train = shuffled;
    let val = train.split_off(n_train);
    Ok(Split { train, val, test })
}

/// Per-feature affine normalisation fitted on the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean: [f64; INPUT_COLUMNS],
    pub sd: [f64; INPUT_COLUMNS],
}

impl NormalizationStats {
    /// Fits mean and (population) standard deviation per input column.
    /// A constant column is an error: it cannot be scaled to unit variance
    /// and almost always indicates a degenerate dataset.
    pub fn fit(records: &[SampleRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Invalid(
                "cannot fit normalisation on an empty training split".into(),
            ));
        }
        let n = records.len() as f64;
        let mut mean = [0.0; INPUT_COLUMNS];
        for r in records {
            for (m, x) in mean.iter_mut().zip(r.inputs.iter()) {
                *m += x;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut sd = [0.0; INPUT_COLUMNS];
        for r in records {
            for ((s, m), x) in sd.iter_mut().zip(mean.iter()).zip(r.inputs.iter()) {
                let d = x - m;
                *s += d * d;
            }
        }
        for (j, s) in sd.iter_mut().enumerate() {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                return Err(Error::Invalid(format!(
                    "training column {} ({}) is constant; cannot normalise",
                    j, COLUMN_NAMES[j]
                )));
            }
        }
        Ok(NormalizationStats { mean, sd })
    }

    /// Maps raw inputs to z-scores.
    pub fn normalize(&self, inputs: &[f64; INPUT_COLUMNS]) -> [f64; INPUT_COLUMNS] {
        let mut out = [0.0; INPUT_COLUMNS];
        for j in 0..INPUT_COLUMNS {
            out[j] = (inputs[j] - self.mean[j]) / self.sd[j];
        }
        out
    }
}

/// Keeps a random `floor(n / factor)` of the records, drawn without
/// replacement with a generator seeded by `seed`. `factor == 1` returns the
/// records unchanged.
pub fn subsample(records: &[SampleRecord], factor: u32, seed: u64) -> Result<Vec<SampleRecord>> {
    if factor == 0 {
        return Err(Error::Invalid("subsample factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(records.to_vec());
    }
    let keep = records.len() / factor as usize;
    if keep == 0 {
        return Err(Error::Invalid(format!(
            "subsampling {} records by factor {factor} would leave none",
            records.len()
        )));
    }
    let mut shuffled: Vec<SampleRecord> = records.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    shuffled.truncate(keep);
    Ok(shuffled)
}

/// Normalised input matrix and raw target vector for a record slice.
pub fn to_model_arrays(
    records: &[SampleRecord],
    stats: &NormalizationStats,
    target: Target,
) -> (Tensor, Vec<f64>) {
    let mut inputs = Vec::with_capacity(records.len() * INPUT_COLUMNS);
    let mut targets = Vec::with_capacity(records.len());
    for r in records {
        inputs.extend_from_slice(&stats.normalize(&r.inputs));
        targets.push(r.target(target));
    }
    let matrix = Tensor::matrix(records.len(), INPUT_COLUMNS, inputs)
        .expect("row-major layout matches declared shape");
    (matrix, targets)
}
