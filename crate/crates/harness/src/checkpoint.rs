//! Self-describing binary checkpoints.
//!
//! A checkpoint stores everything needed to reproduce a trained predictor:
//! the architecture spec, the regression target, the input normalisation
//! fitted on the training split, and every parameter tensor in declaration
//! order. All multi-byte values are little-endian; floats are raw IEEE-754
//! bits, so a save/load cycle is bitwise exact.
//!
//! Layout (version 1):
//!
//! ```text
//! magic            8 bytes  "PENNCKPT"
//! version          u32
//! model kind       string   (u32 length + UTF-8)
//! width multiplier f64
//! input dims       4 x u32  (overall, intake, core, exhaust)
//! target           string
//! normalisation    18 x f64 means, 18 x f64 standard deviations
//! tensor count     u32
//! per tensor:      rank u8, rank x u32 dims, f64 data (row-major)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use penn_core::models::{InputDims, Model, ModelKind, ModelSpec};
use penn_core::objectives::Target;
use penn_core::{Shape, Tensor};

use crate::data::NormalizationStats;
use crate::schema::INPUT_COLUMNS;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"PENNCKPT";
const VERSION: u32 = 1;
/// Upper bound on string fields; anything longer is a corrupt file.
const MAX_STRING: u32 = 256;

/// A trained predictor in portable form.
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub target: Target,
    pub stats: NormalizationStats,
    pub model: Box<dyn Model>,
}

impl std::fmt::Debug for Checkpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Checkpoint")
            .field("spec", &self.spec)
            .field("target", &self.target)
            .field("params", &self.model.param_count())
            .finish_non_exhaustive()
    }
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        write_u32(w, VERSION)?;
        write_str(w, self.spec.kind.name())?;
        write_f64(w, self.spec.width_multiplier)?;
        let dims = self.spec.input_dims;
        for d in [dims.overall, dims.intake, dims.core, dims.exhaust] {
            write_u32(w, d as u32)?;
        }
        write_str(w, self.target.name())?;
        for v in self.stats.mean.iter().chain(self.stats.sd.iter()) {
            write_f64(w, *v)?;
        }

        let mut tensors: Vec<Tensor> = Vec::new();
        self.model.for_each_param(&mut |t| tensors.push(t.clone()));
        write_u32(w, tensors.len() as u32)?;
        for t in &tensors {
            match t.shape() {
                Shape::Vector(n) => {
                    w.write_all(&[1u8])?;
                    write_u32(w, n as u32)?;
                }
                Shape::Matrix { rows, cols } => {
                    w.write_all(&[2u8])?;
                    write_u32(w, rows as u32)?;
                    write_u32(w, cols as u32)?;
                }
            }
            for v in t.as_slice() {
                write_f64(w, *v)?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let checkpoint = Self::read_from(&mut r)?;
        let mut trailing = [0u8; 1];
        match r.read(&mut trailing) {
            Ok(0) => Ok(checkpoint),
            Ok(_) => Err(Error::Checkpoint(format!(
                "{} has trailing data after the last tensor",
                path.display()
            ))),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    fn read_from(r: &mut impl Read) -> Result<Checkpoint> {
        let mut magic = [0u8; 8];
        read_exact(r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint(
                "bad magic: not a checkpoint file".into(),
            ));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {version} (this build reads {VERSION})"
            )));
        }

        let kind_name = read_str(r)?;
        let kind = ModelKind::parse(&kind_name).ok_or_else(|| {
            Error::Checkpoint(format!("unknown model kind {kind_name:?}"))
        })?;
        let width_multiplier = read_f64(r)?;
        let dims = InputDims {
            overall: read_u32(r)? as usize,
            intake: read_u32(r)? as usize,
            core: read_u32(r)? as usize,
            exhaust: read_u32(r)? as usize,
        };
        if dims.total() != INPUT_COLUMNS {
            return Err(Error::Checkpoint(format!(
                "input partition sums to {}, schema has {INPUT_COLUMNS} columns",
                dims.total()
            )));
        }
        let target_name = read_str(r)?;
        let target = Target::parse(&target_name).ok_or_else(|| {
            Error::Checkpoint(format!("unknown target {target_name:?}"))
        })?;

        let mut mean = [0.0; INPUT_COLUMNS];
        let mut sd = [0.0; INPUT_COLUMNS];
        for m in mean.iter_mut() {
            *m = read_f64(r)?;
        }
        for s in sd.iter_mut() {
            *s = read_f64(r)?;
            if !(*s > 0.0) || !s.is_finite() {
                return Err(Error::Checkpoint(format!(
                    "normalisation standard deviation {s} is not positive"
                )));
            }
        }
        let stats = NormalizationStats { mean, sd };

        let spec = ModelSpec::new(kind)
            .with_width_multiplier(width_multiplier)
            .with_input_dims(dims);
        let mut model = spec.build(0)?;

        let tensor_count = read_u32(r)? as usize;
        let mut tensors = Vec::with_capacity(tensor_count);
        for i in 0..tensor_count {
            let mut rank = [0u8; 1];
            read_exact(r, &mut rank)?;
            let shape = match rank[0] {
                1 => Shape::Vector(read_u32(r)? as usize),
                2 => Shape::Matrix {
                    rows: read_u32(r)? as usize,
                    cols: read_u32(r)? as usize,
                },
                other => {
                    return Err(Error::Checkpoint(format!(
                        "tensor {i} has unsupported rank {other}"
                    )))
                }
            };
            if shape.len() == 0 || shape.len() > 100_000_000 {
                return Err(Error::Checkpoint(format!(
                    "tensor {i} has implausible size {}",
                    shape.len()
                )));
            }
            let mut data = vec![0.0; shape.len()];
            for v in data.iter_mut() {
                *v = read_f64(r)?;
            }
            let tensor = match shape {
                Shape::Vector(_) => Tensor::vector(data),
                Shape::Matrix { rows, cols } => Tensor::matrix(rows, cols, data)
                    .expect("length was derived from the shape"),
            };
            tensors.push(tensor);
        }

        let mut index = 0;
        let mut mismatch: Option<String> = None;
        model.for_each_param_mut(&mut |param| {
            if mismatch.is_some() {
                return;
            }
            match tensors.get(index) {
                None => {
                    mismatch = Some(format!(
                        "file has {tensor_count} tensors but the architecture needs more"
                    ));
                }
                Some(stored) if stored.shape() != param.shape() => {
                    mismatch = Some(format!(
                        "tensor {index} shape {} does not match architecture shape {}",
                        stored.shape(),
                        param.shape()
                    ));
                }
                Some(stored) => {
                    param.as_mut_slice().copy_from_slice(stored.as_slice());
                }
            }
            index += 1;
        });
        if let Some(message) = mismatch {
            return Err(Error::Checkpoint(message));
        }
        if index != tensor_count {
            return Err(Error::Checkpoint(format!(
                "file has {tensor_count} tensors but the architecture has {index}"
            )));
        }

        Ok(Checkpoint {
            spec,
            target,
            stats,
            model,
        })
    }
}

fn write_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    write_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        Error::Checkpoint(format!("file ends early or is unreadable: {e}"))
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    read_exact(r, &mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_str(r: &mut impl Read) -> Result<String> {
    let len = read_u32(r)?;
    if len > MAX_STRING {
        return Err(Error::Checkpoint(format!(
            "string field of {len} bytes exceeds the format limit"
        )));
    }
    let mut buf = vec![0u8; len as usize];
    read_exact(r, &mut buf)?;
    String::from_utf8(buf)
        .map_err(|_| Error::Checkpoint("string field is not UTF-8".into()))
}
