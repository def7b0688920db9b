//! Input-space attacks on RUL regressors.
//!
//! [`fgsm`] perturbs one window along the sign of its loss gradient.
//! [`uap_compute`] searches for a single perturbation `U`, bounded by
//! `||U||_inf <= epsilon`, that makes the model overpredict
//! `f(X + U) > (1 + alpha) * Y` on as many windows as possible.

mod fgsm;
mod perturbation;
mod uap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::ModelError;

pub use fgsm::{fgsm, sign};
pub use perturbation::{Perturbation, PERTURBATION_VERSION};
pub use uap::{
    check_fool, inner_min_r, predict_shifted, project_linf, project_linf_in_place, uap_compute,
    uap_compute_observed,
    InnerSolution, UapEvent,
};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid attack config: {0}")]
    Config(String),
    #[error("no windows with positive RUL to attack or score")]
    NoEligibleSamples,
    #[error("perturbation has {got} values, windows have {expected}")]
    Shape { expected: usize, got: usize },
    #[error("perturbation file: {0}")]
    Format(String),
    #[error("perturbation io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    /// L-infinity bound on the perturbation, in normalized units.
    pub epsilon: f64,
    /// Overprediction factor: fooled means `f > (1 + alpha) * y`.
    pub alpha: f64,
    /// Target fraction of fooled windows.
    pub r_fool: f64,
    /// Maximum passes over the data.
    pub e_fool: usize,
    /// Sign-step size of the inner solve; `None` means `epsilon / 10`.
    pub inner_step: Option<f64>,
    pub inner_max_iters: usize,
    /// Clamp `X + U` into `[0, 1]` before every model evaluation.
    pub clamp_inputs: bool,
    /// Seed of the per-epoch shuffle.
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            alpha: 0.1,
            r_fool: 0.99,
            e_fool: 3,
            inner_step: None,
            inner_max_iters: 20,
            clamp_inputs: false,
            seed: 0,
        }
    }
}

impl AttackConfig {
    pub fn step(&self) -> f64 {
        self.inner_step.unwrap_or(self.epsilon / 10.0)
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        let bad = |m: String| Err(AttackError::Config(m));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be > 0, got {}", self.alpha));
        }
        if !(self.r_fool > 0.0 && self.r_fool <= 1.0) {
            return bad(format!("r_fool must lie in (0, 1], got {}", self.r_fool));
        }
        if self.e_fool < 1 {
            return bad("e_fool must be >= 1".into());
        }
        if let Some(s) = self.inner_step {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("inner_step must be > 0, got {s}"));
            }
        }
        if self.inner_max_iters < 1 {
            return bad("inner_max_iters must be >= 1".into());
        }
        Ok(())
    }
}
