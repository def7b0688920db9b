//! LSTM and GRU sequence regressors mapping an `M x N` window to one RUL value.
//!
//! Both architectures use a single recurrent layer, zero initial state and a
//! linear head on the final hidden state. The head output is multiplied by a
//! fixed `output_scale` so the network itself works in roughly unit range
//! while predictions come out in cycles.

mod cell;
mod checkpoint;
mod train;

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ndgrad::{GradError, Var};
use crate::{rng, Tape, Tensor};

pub use checkpoint::{load, load_as, save, CHECKPOINT_VERSION};
pub use train::{train, TrainConfig, TrainOutcome};

/// Windows per tape when predicting many samples.
pub const PREDICT_CHUNK: usize = 256;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("window of {len} values is not a whole number of {input_dim}-feature steps")]
    WindowShape { len: usize, input_dim: usize },
    #[error("windows in one batch must share a length ({expected} vs {got})")]
    RaggedBatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Grad(#[from] GradError),
    #[error("training diverged: non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize, loss: f64 },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("checkpoint format error: {0}")]
    Format(String),
    #[error("checkpoint holds a {found} model, expected {expected}")]
    ArchMismatch { expected: Arch, found: Arch },
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Lstm,
    Gru,
}

impl Arch {
    pub fn label(self) -> &'static str {
        match self {
            Arch::Lstm => "LSTM",
            Arch::Gru => "GRU",
        }
    }

    /// Parameter names and shapes, in storage order.
    pub fn layout(self, input_dim: usize, hidden_dim: usize) -> Vec<(String, [usize; 2])> {
        let (n, h) = (input_dim, hidden_dim);
        let mut out = Vec::new();
        match self {
            Arch::Lstm => {
                for g in ["i", "f", "g", "o"] {
                    out.push((format!("w_x{g}"), [n, h]));
                    out.push((format!("w_h{g}"), [h, h]));
                    out.push((format!("b_{g}"), [1, h]));
                }
            }
            Arch::Gru => {
                for g in ["r", "z", "n"] {
                    out.push((format!("w_x{g}"), [n, h]));
                    out.push((format!("w_h{g}"), [h, h]));
                    out.push((format!("b_x{g}"), [1, h]));
                    out.push((format!("b_h{g}"), [1, h]));
                }
            }
        }
        out.push(("w_out".into(), [h, 1]));
        out.push(("b_out".into(), [1, 1]));
        out
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" => Ok(Arch::Lstm),
            "gru" => Ok(Arch::Gru),
            other => Err(format!("unknown architecture `{other}` (expected lstm or gru)")),
        }
    }
}

/// Weights of one recurrent regressor.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub arch: Arch,
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// Seed the weights were initialised from.
    pub seed: u64,
    /// Multiplier applied to the head output.
    pub output_scale: f64,
    weights: Vec<Tensor>,
}

impl ModelParams {
    /// Uniform init in `[-1/sqrt(H), 1/sqrt(H)]` for every weight and bias.
    pub fn init(arch: Arch, input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let bound = 1.0 / (hidden_dim as f64).sqrt();
        let mut r = rng::seeded(seed);
        let weights = arch
            .layout(input_dim, hidden_dim)
            .into_iter()
            .map(|(_, [a, b])| {
                let data = (0..a * b).map(|_| r.random_range(-bound..=bound)).collect();
                Tensor::from_vec(vec![a, b], data).expect("layout shape")
            })
            .collect();
        Self {
            arch,
            input_dim,
            hidden_dim,
            seed,
            output_scale: 1.0,
            weights,
        }
    }

    /// All weights zero.
    pub fn zeros(arch: Arch, input_dim: usize, hidden_dim: usize) -> Self {
        let weights = arch
            .layout(input_dim, hidden_dim)
            .into_iter()
            .map(|(_, [a, b])| Tensor::zeros(vec![a, b]))
            .collect();
        Self {
            arch,
            input_dim,
            hidden_dim,
            seed: 0,
            output_scale: 1.0,
            weights,
        }
    }

    pub fn with_output_scale(mut self, scale: f64) -> Self {
        self.output_scale = scale;
        self
    }

    pub fn weights(&self) -> &[Tensor] {
        &self.weights
    }

    pub fn weight(&self, name: &str) -> Option<&Tensor> {
        self.position(name).map(|i| &self.weights[i])
    }

    pub fn weight_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.position(name).map(move |i| &mut self.weights[i])
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.arch
            .layout(self.input_dim, self.hidden_dim)
            .iter()
            .position(|(n, _)| n == name)
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Tensor] {
        &mut self.weights
    }

    pub(crate) fn from_parts(
        arch: Arch,
        input_dim: usize,
        hidden_dim: usize,
        seed: u64,
        output_scale: f64,
        weights: Vec<Tensor>,
    ) -> Self {
        Self {
            arch,
            input_dim,
            hidden_dim,
            seed,
            output_scale,
            weights,
        }
    }

    /// Number of time steps in a flattened window.
    fn steps_of(&self, len: usize) -> Result<usize, ModelError> {
        if len == 0 || !len.is_multiple_of(self.input_dim) {
            return Err(ModelError::WindowShape {
                len,
                input_dim: self.input_dim,
            });
        }
        Ok(len / self.input_dim)
    }

    /// Places the weights on `tape`, as trainable leaves or constants.
    pub fn record_weights(&self, tape: &mut Tape, trainable: bool) -> Vec<Var> {
        self.weights
            .iter()
            .map(|w| tape.leaf(w.clone(), trainable))
            .collect()
    }

    /// Splits a batch of flattened windows into per-step `[B x N]` tensors.
    pub fn step_inputs(&self, batch: &[&[f64]]) -> Result<Vec<Tensor>, ModelError> {
        let first = batch.first().ok_or(ModelError::EmptyBatch)?;
        let steps = self.steps_of(first.len())?;
        for w in batch {
            if w.len() != first.len() {
                return Err(ModelError::RaggedBatch {
                    expected: first.len(),
                    got: w.len(),
                });
            }
        }
        let n = self.input_dim;
        Ok((0..steps)
            .map(|t| {
                let mut data = Vec::with_capacity(batch.len() * n);
                for w in batch {
                    data.extend_from_slice(&w[t * n..(t + 1) * n]);
                }
                Tensor::from_vec(vec![batch.len(), n], data).expect("step shape")
            })
            .collect())
    }

    /// Records the network on `tape`; returns the raw head output `[B x 1]`
    /// before `output_scale`.
    pub fn forward_head(
        &self,
        tape: &mut Tape,
        weights: &[Var],
        steps: &[Var],
    ) -> Result<Var, ModelError> {
        cell::forward_head(self, tape, weights, steps)
    }

    /// Prediction in cycles, `[B x 1]`.
    pub fn forward(&self, tape: &mut Tape, weights: &[Var], steps: &[Var]) -> Result<Var, ModelError> {
        let head = self.forward_head(tape, weights, steps)?;
        Ok(tape.scale(head, self.output_scale))
    }

    /// Prediction `[1 x 1]` for one window recorded as an `[M x N]` variable,
    /// so the window itself can be differentiated.
    pub fn forward_window(&self, tape: &mut Tape, weights: &[Var], window: Var) -> Result<Var, ModelError> {
        let (m, n) = tape.value(window).dims2()?;
        if n != self.input_dim {
            return Err(ModelError::WindowShape {
                len: m * n,
                input_dim: self.input_dim,
            });
        }
        let steps = (0..m)
            .map(|t| tape.row(window, t))
            .collect::<Result<Vec<_>, _>>()?;
        self.forward(tape, weights, &steps)
    }

    fn predict_chunk(&self, batch: &[&[f64]]) -> Result<Vec<f64>, ModelError> {
        let mut tape = Tape::new();
        let weights = self.record_weights(&mut tape, false);
        let steps: Vec<Var> = self
            .step_inputs(batch)?
            .into_iter()
            .map(|s| tape.constant(s))
            .collect();
        let out = self.forward(&mut tape, &weights, &steps)?;
        Ok(tape.value(out).data().to_vec())
    }

    /// Records the network with the window as a differentiable input.
    fn record_single(&self, window: &[f64]) -> Result<(Tape, Vec<Var>, Var), ModelError> {
        let mut tape = Tape::new();
        let weights = self.record_weights(&mut tape, false);
        let steps: Vec<Var> = self
            .step_inputs(&[window])?
            .into_iter()
            .map(|s| tape.param(s))
            .collect();
        let out = self.forward(&mut tape, &weights, &steps)?;
        Ok((tape, steps, out))
    }

    fn gather_step_grads(grads: &crate::Gradients, steps: &[Var]) -> Vec<f64> {
        steps
            .iter()
            .flat_map(|s| grads.get(*s).expect("step is a leaf").data().to_vec())
            .collect()
    }
}

/// A differentiable model of a flattened `M x N` window.
pub trait Regressor: Sync {
    fn input_dim(&self) -> usize;

    /// Short identifier used in reports.
    fn label(&self) -> String;

    fn predict_batch(&self, batch: &[&[f64]]) -> Result<Vec<f64>, ModelError>;

    /// `f(x)` and `df/dx` for one window.
    fn output_and_grad(&self, window: &[f64]) -> Result<(f64, Vec<f64>), ModelError>;

    /// `f(x)` and the gradient of the squared error `(f(x) - y)^2` w.r.t. `x`.
    fn loss_and_grad(&self, window: &[f64], y: f64) -> Result<(f64, Vec<f64>), ModelError> {
        let (f, g) = self.output_and_grad(window)?;
        let k = 2.0 * (f - y);
        Ok((f, g.into_iter().map(|v| k * v).collect()))
    }

    fn predict(&self, window: &[f64]) -> Result<f64, ModelError> {
        Ok(self.predict_batch(&[window])?[0])
    }
}

impl Regressor for ModelParams {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn label(&self) -> String {
        self.arch.label().to_string()
    }

    fn predict_batch(&self, batch: &[&[f64]]) -> Result<Vec<f64>, ModelError> {
        self.predict_chunk(batch)
    }

    fn output_and_grad(&self, window: &[f64]) -> Result<(f64, Vec<f64>), ModelError> {
        let (mut tape, steps, out) = self.record_single(window)?;
        let pred = tape.value(out).data()[0];
        let sum = tape.sum(out);
        let grads = tape.backward(sum)?;
        Ok((pred, Self::gather_step_grads(&grads, &steps)))
    }

    fn loss_and_grad(&self, window: &[f64], y: f64) -> Result<(f64, Vec<f64>), ModelError> {
        let (mut tape, steps, out) = self.record_single(window)?;
        let pred = tape.value(out).data()[0];
        let target = tape.constant(Tensor::from_vec(vec![1, 1], vec![y])?);
        let loss = tape.mse_loss(out, target)?;
        let grads = tape.backward(loss)?;
        Ok((pred, Self::gather_step_grads(&grads, &steps)))
    }
}

/// Predicts every window, fanning chunks of [`PREDICT_CHUNK`] out over the
/// rayon pool. Output order matches input order.
pub fn predict_all<R: Regressor + ?Sized>(model: &R, windows: &[&[f64]]) -> Result<Vec<f64>, ModelError> {
    let chunks: Vec<Vec<f64>> = windows
        .par_chunks(PREDICT_CHUNK)
        .map(|c| model.predict_batch(c))
        .collect::<Result<_, _>>()?;
    Ok(chunks.into_iter().flatten().collect())
}
