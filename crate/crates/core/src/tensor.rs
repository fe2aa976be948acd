//! Dense tensors of 64-bit reals, rank 1 or rank 2, row-major.
//!
//! Rank-2 tensors are interpreted as `[rows, cols]`; in batched forward
//! passes rows index samples and columns index features. A rank-1 tensor of
//! length `n` behaves like a single row of `n` features wherever an
//! operation iterates over rows, but keeps its own [`Shape`] so vectors and
//! one-row matrices remain distinct values.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Shape of a [`Tensor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Rank-1 tensor of `n` elements.
    Vector(usize),
    /// Rank-2 row-major tensor.
    Matrix { rows: usize, cols: usize },
}

impl Shape {
    /// Total number of elements.
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(n) => n,
            Shape::Matrix { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of rows when viewed as a batch (a vector is one row).
    pub fn rows(&self) -> usize {
        match *self {
            Shape::Vector(_) => 1,
            Shape::Matrix { rows, .. } => rows,
        }
    }

    /// Number of columns when viewed as a batch.
    pub fn cols(&self) -> usize {
        match *self {
            Shape::Vector(n) => n,
            Shape::Matrix { cols, .. } => cols,
        }
    }

    /// Same rank and row count, different column count. Used by operations
    /// that map features to features so vectors stay vectors and batches
    /// stay batches.
    pub fn with_cols(&self, cols: usize) -> Shape {
        match *self {
            Shape::Vector(_) => Shape::Vector(cols),
            Shape::Matrix { rows, .. } => Shape::Matrix { rows, cols },
        }
    }
}

impl core::fmt::Display for Shape {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match *self {
            Shape::Vector(n) => write!(f, "[{n}]"),
            Shape::Matrix { rows, cols } => write!(f, "[{rows}x{cols}]"),
        }
    }
}

/// Dense tensor; the data length always equals the shape's element count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tensor {
    shape: Option<Shape>,
    data: Vec<f64>,
}

impl Tensor {
    /// Rank-1 tensor owning `data`.
    pub fn vector(data: Vec<f64>) -> Tensor {
        Tensor {
            shape: Some(Shape::Vector(data.len())),
            data,
        }
    }

    /// Rank-2 tensor owning `data` in row-major order.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Tensor> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "Tensor::matrix",
                expected: Shape::Matrix { rows, cols },
                actual: Shape::Vector(data.len()),
            });
        }
        Ok(Tensor {
            shape: Some(Shape::Matrix { rows, cols }),
            data,
        })
    }

    /// Zero-filled tensor of the given shape.
    pub fn zeros(shape: Shape) -> Tensor {
        Tensor {
            shape: Some(shape),
            data: vec![0.0; shape.len()],
        }
    }

    pub fn zeros_vector(n: usize) -> Tensor {
        Tensor::zeros(Shape::Vector(n))
    }

    pub fn zeros_matrix(rows: usize, cols: usize) -> Tensor {
        Tensor::zeros(Shape::Matrix { rows, cols })
    }

    /// Rank-2 tensor from a slice of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Tensor> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    op: "Tensor::from_rows",
                    expected: Shape::Vector(cols),
                    actual: Shape::Vector(row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Tensor::matrix(rows.len(), cols, data)
    }

    pub fn shape(&self) -> Shape {
        // `Default` exists only so gradients can be taken out of buffers; a
        // defaulted tensor is an empty vector.
        self.shape.unwrap_or(Shape::Vector(0))
    }

    pub fn rank(&self) -> usize {
        match self.shape() {
            Shape::Vector(_) => 1,
            Shape::Matrix { .. } => 2,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape().rows()
    }

    pub fn cols(&self) -> usize {
        self.shape().cols()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row `r` viewed as a feature slice.
    pub fn row(&self, r: usize) -> &[f64] {
        let cols = self.cols();
        &self.data[r * cols..(r + 1) * cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let cols = self.cols();
        &mut self.data[r * cols..(r + 1) * cols]
    }

    /// Element at batch row `r`, column `c`.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
