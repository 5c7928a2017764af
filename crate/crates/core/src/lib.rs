//! Identity-document detection with a small segmentation CNN.
//!
//! The pipeline has five parts:
//!
//! 1. [`tensor`] – dense tensors and forward/backward kernels.
//! 2. [`nn`] – the encoder/decoder network, loss, Adam, training and the model file.
//! 3. [`data`] – manifests, images, ground-truth rasterization and a synthetic scene generator.
//! 4. [`geometry`] – probability map → contours → simplified quad; polygon IoU.
//! 5. [`eval`] – end-to-end detection, accuracy-vs-IoU curves and latency.
//!
//! [`cli`] binds them into the `idseg` binary.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod nn;
pub mod tensor;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, ModelFileError, Result};
pub use geometry::{Point, Quad};
pub use tensor::{Real, Tensor};
