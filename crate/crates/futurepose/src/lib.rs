//! Probabilistic 3D human motion prediction.
//!
//! A sequence-to-sequence GRU generator is trained adversarially against a
//! skip-connection MLP discriminator (GAN loss plus gradient penalty plus
//! motion-specific losses), while a recurrent quality network with temporal
//! attention is co-trained to score how plausible a pose sequence is. The
//! discriminator trunk doubles as a pretrained feature extractor for action
//! classification.
//!
//! The crate is self-contained: it ships its own reverse-mode autodiff engine
//! (with the second-order support the gradient penalty requires), a synthetic
//! motion generator for desk-scale experiments, and text/binary interchange
//! formats for datasets and checkpoints.

pub mod autodiff;
pub mod data;
pub mod error;
pub mod io;
pub mod loss;
pub mod nets;
pub mod rng;
pub mod train;
pub mod verify;

pub use error::{Error, Result};

/// Scalar type used throughout. `f64` by default; the `real32` feature
/// switches the whole crate to `f32`.
#[cfg(not(feature = "real32"))]
pub type Real = f64;
#[cfg(feature = "real32")]
pub type Real = f32;
