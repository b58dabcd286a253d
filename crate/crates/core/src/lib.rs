//! Core of the MSCE super-resolution toolkit.
//!
//! Everything in this crate is pure computation over in-memory buffers: dense
//! tensors, single-channel image planes, bicubic/Gaussian resampling, the
//! Canny operator and its differentiable surrogate, convolutional layers with
//! hand-derived backward passes, Adam, the MSE + edge-map training objective,
//! PSNR/SSIM, and patch batching. File formats, corpus scanning and the CLI
//! live in the `msce` crate.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod data;
pub mod edge;
mod error;
pub mod image;
pub mod loss;
pub mod metrics;
pub mod nn;
pub mod optim;
mod real;
pub mod resample;
pub mod tensor;
pub mod train;

pub use error::{CheckpointError, Error, Result};
pub use image::{Plane, PlaneImage, RgbImage, YCbCr};
pub use real::Real;
pub use tensor::Tensor;
