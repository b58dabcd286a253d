//! Convolutional SR models with hand-written backward passes.

mod activation;
pub mod checkpoint;
mod conv;
mod model;
mod shuffle;

pub use activation::Activation;
pub use conv::{Conv2d, ConvGrads};
pub use model::{build_model, init_params, Architecture, Gradients, Layer, Model, ModelParams, ModelSpec, Tape};
pub use shuffle::{pixel_shuffle, pixel_unshuffle};
