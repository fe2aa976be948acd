//! Physical-embedded neural networks for aeroengine performance prediction.
//!
//! The crate is split along the numerical stack:
//!
//! * [`tensor`] — dense rank-1/rank-2 tensors of `f64`;
//! * [`tape`] — a recorded computation graph with reverse-mode gradients;
//! * [`nn`] — fully connected layers and He initialization;
//! * [`optim`] — Adam and milestone learning-rate schedules;
//! * [`objectives`] — MSE / MAE / MARE losses and the prediction policy;
//! * [`models`] — the PENN family (four fusion variants) and the two
//!   multilayer-perceptron baselines, all behind one [`models::Model`] trait.
//!
//! Everything here is `no_std` (with `alloc`) so trained networks can run on
//! targets without an operating system; file formats, dataset handling and
//! the experiment harness live in the companion `penn-harness` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod models;
pub mod nn;
pub mod objectives;
pub mod optim;
pub mod tape;
pub mod tensor;

pub use error::{Error, Result};
pub use tape::{Gradients, NodeId, Tape};
pub use tensor::{Shape, Tensor};

/// Shorthands for `libm` routines so call sites read like plain float math.
pub(crate) mod fmath {
    #[inline]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }

    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }

    #[inline]
    pub fn pow(base: f64, exponent: f64) -> f64 {
        libm::pow(base, exponent)
    }

    #[inline]
    pub fn round(x: f64) -> f64 {
        libm::round(x)
    }
}
