//! Attack metrics and the experiments built on them.

mod csv;
mod experiments;
mod metrics;

use serde::Serialize;
use thiserror::Error;

use crate::attacks::{AttackError, Perturbation};
use crate::data::WindowSet;
use crate::models::{ModelError, Regressor};

pub use self::csv::{
    last_windows_csv, report_csv, sweep_csv, traces_csv, trajectory_csv, REPORT_HEADER,
    SWEEP_HEADER, TRACES_HEADER, TRAJECTORY_HEADER,
};
pub use experiments::{
    epsilon_sweep, input_traces, trajectory_report, transfer_matrix, SweepResult, SweepRow,
    TraceRow, Trajectory, TrajectoryRow, DEFAULT_EPSILON_GRID,
};
pub use metrics::{exact_sum, fooling_percentage, mape};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no samples to score")]
    Empty,
    #[error("{preds} predictions for {labels} labels")]
    Length { preds: usize, labels: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Label of the attack column when no perturbation is applied.
pub const NO_ATTACK: &str = "None";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRow {
    pub engine_id: u32,
    pub end_cycle: u32,
    pub y: f64,
    pub pred_clean: f64,
    pub pred_attacked: f64,
}

/// Metrics of one model under one (or no) perturbation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackReport {
    pub model: String,
    pub attack: String,
    /// Percent of scored windows with attacked prediction above `(1 + alpha) * y`.
    pub fooling_percentage: f64,
    pub mape: f64,
    /// Windows scored (those with `y > 0`).
    pub n_samples: usize,
    /// Windows left out because `y == 0`.
    pub n_excluded: usize,
    #[serde(skip)]
    pub rows: Vec<SampleRow>,
}

impl AttackReport {
    /// Mean of `pred_attacked - pred_clean` over the scored windows.
    pub fn mean_shift(&self) -> f64 {
        let total = exact_sum(self.rows.iter().map(|r| r.pred_attacked - r.pred_clean));
        total / self.rows.len().max(1) as f64
    }

    pub fn clean_fooling_percentage(&self, alpha: f64) -> Result<f64, EvalError> {
        let (p, y): (Vec<f64>, Vec<f64>) = self.rows.iter().map(|r| (r.pred_clean, r.y)).unzip();
        fooling_percentage(&p, &y, alpha)
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Clean and attacked predictions for every window with `y > 0`.
///
/// Without a perturbation the attacked column is the clean column.
pub fn evaluate<R: Regressor + ?Sized>(
    model: &R,
    data: &WindowSet,
    perturbation: Option<&Perturbation>,
    alpha: f64,
    clamp: bool,
) -> Result<AttackReport, EvalError> {
    if data.is_empty() {
        return Err(EvalError::Empty);
    }
    if model.input_dim() != data.n {
        return Err(EvalError::Shape(format!(
            "model expects {} features, windows have {}",
            model.input_dim(),
            data.n
        )));
    }
    if let Some(p) = perturbation {
        if (p.m, p.n) != (data.m, data.n) {
            return Err(EvalError::Shape(format!(
                "perturbation is {}x{}, windows are {}x{}",
                p.m, p.n, data.m, data.n
            )));
        }
    }
    let scored: Vec<&crate::data::Window> = data.windows.iter().filter(|w| w.y > 0.0).collect();
    let n_excluded = data.len() - scored.len();
    if scored.is_empty() {
        return Err(EvalError::Empty);
    }
    let inputs: Vec<&[f64]> = scored.iter().map(|w| w.x.as_slice()).collect();
    let labels: Vec<f64> = scored.iter().map(|w| w.y).collect();
    let clean = crate::attacks::predict_shifted(model, &inputs, None, clamp)?;
    let attacked = match perturbation {
        None => clean.clone(),
        Some(p) => crate::attacks::predict_shifted(model, &inputs, Some(&p.values), clamp)?,
    };
    let rows = scored
        .iter()
        .zip(clean.iter().zip(&attacked))
        .map(|(w, (&c, &a))| SampleRow {
            engine_id: w.engine_id,
            end_cycle: w.end_cycle,
            y: w.y,
            pred_clean: c,
            pred_attacked: a,
        })
        .collect();
    Ok(AttackReport {
        model: model.label(),
        attack: perturbation.map_or_else(|| NO_ATTACK.to_string(), |p| p.source_model.clone()),
        fooling_percentage: fooling_percentage(&attacked, &labels, alpha)?,
        mape: mape(&attacked, &labels)?,
        n_samples: labels.len(),
        n_excluded,
        rows,
    })
}
