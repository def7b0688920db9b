use serde::{Deserialize, Serialize};

use crate::data::WindowSet;
use crate::ndgrad::Var;
use crate::{rng, Tape, Tensor};

use super::{ModelError, ModelParams};

/// Mini-batch Adam settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Seed for the per-epoch shuffle.
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 1e-3,
            batch_size: 64,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            clip_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::Config(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(ModelError::Config("Adam betas must lie in [0, 1)".into()));
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(ModelError::Config("clip_norm must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean squared error in cycles^2 over each epoch's mini-batches,
    /// measured before the corresponding updates.
    pub loss_history: Vec<f64>,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.weights().iter().map(|w| vec![0.0; w.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &[Tensor], cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        for (k, (w, g)) in params.weights_mut().iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (i, (wi, &gi)) in w.data_mut().iter_mut().zip(g.data()).enumerate() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                *wi -= cfg.learning_rate * mh / (vh.sqrt() + cfg.adam_eps);
            }
        }
    }
}

fn clip_global(grads: &mut [Tensor], max_norm: f64) {
    let sq: f64 = grads
        .iter()
        .flat_map(|g| g.data().iter())
        .map(|v| v * v)
        .sum();
    let norm = sq.sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        for g in grads {
            for v in g.data_mut() {
                *v *= k;
            }
        }
    }
}

/// Fits `params` to `data` by minimising MSE with Adam.
///
/// The loss is taken on the head output against `y / output_scale`, which is
/// the same objective up to a constant factor. Deterministic given
/// `cfg.seed`. With `epochs == 0` the parameters come back unchanged.
pub fn train(params: &ModelParams, data: &WindowSet, cfg: &TrainConfig) -> Result<TrainOutcome, ModelError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut params = params.clone();
    let mut adam = Adam::new(&params);
    let mut shuffle = rng::seeded(cfg.seed);
    let scale = params.output_scale;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let order = rng::permutation(data.len(), &mut shuffle);
        let mut weighted = 0.0;
        for (batch_no, idx) in order.chunks(cfg.batch_size).enumerate() {
            let inputs: Vec<&[f64]> = idx.iter().map(|&i| data.windows[i].x.as_slice()).collect();
            let targets: Vec<f64> = idx.iter().map(|&i| data.windows[i].y / scale).collect();

            let mut tape = Tape::new();
            let weights = params.record_weights(&mut tape, true);
            let steps: Vec<Var> = params
                .step_inputs(&inputs)?
                .into_iter()
                .map(|s| tape.constant(s))
                .collect();
            let head = params.forward_head(&mut tape, &weights, &steps)?;
            let target = tape.constant(Tensor::from_vec(vec![idx.len(), 1], targets)?);
            let loss_var = tape.mse_loss(head, target)?;
            let loss = tape.value(loss_var).data()[0];
            if !loss.is_finite() {
                return Err(ModelError::NonFinite {
                    epoch,
                    batch: batch_no,
                    loss,
                });
            }
            weighted += loss * idx.len() as f64;

            let mut grads = tape.backward(loss_var)?;
            let mut gw: Vec<Tensor> = weights
                .iter()
                .map(|w| grads.take(*w).expect("weight leaf"))
                .collect();
            if let Some(c) = cfg.clip_norm {
                clip_global(&mut gw, c);
            }
            adam.step(&mut params, &gw, cfg);
        }
        let mse = weighted / data.len() as f64 * scale * scale;
        log::debug!("epoch {epoch}: train mse {mse:.4}");
        history.push(mse);
    }
    Ok(TrainOutcome {
        params,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_caps_global_norm() {
        let mut g = vec![
            Tensor::from_vec(vec![2], vec![3.0, 4.0]).unwrap(),
            Tensor::from_vec(vec![1], vec![12.0]).unwrap(),
        ];
        clip_global(&mut g, 5.0);
        let n: f64 = g.iter().flat_map(|t| t.data().iter()).map(|v| v * v).sum();
        assert!((n.sqrt() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            batch_size: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
