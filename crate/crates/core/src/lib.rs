//! Universal adversarial perturbations against recurrent remaining-useful-life
//! regressors.
//!
//! The crate is organised bottom-up:
//!
//! - [`ndgrad`]: dense tensors and a reverse-mode tape, generic over [`Scalar`].
//! - [`models`]: LSTM and GRU sequence regressors with training and checkpoints.
//! - [`data`]: C-MAPSS ingestion, min-max scaling, windowing, synthetic fleets.
//! - [`attacks`]: FGSM and the universal perturbation search.
//! - [`eval`]: fooling percentage, MAPE, transfer tables, sweeps, trajectories.
//!
//! The pipeline itself runs in `f64`; the aliases below name that instantiation.

pub mod attacks;
pub mod data;
pub mod eval;
pub mod models;
pub mod ndgrad;
pub mod rng;
mod scalar;

pub use scalar::Scalar;

/// Tensor of `f64`, the precision used throughout the attack pipeline.
pub type Tensor = ndgrad::Tensor<f64>;
/// Tape of `f64`.
pub type Tape = ndgrad::Tape<f64>;
/// Gradients of an `f64` tape.
pub type Gradients = ndgrad::Gradients<f64>;
/// Single-precision tensor, for callers that only need the math layer.
pub type TensorF32 = ndgrad::Tensor<f32>;
