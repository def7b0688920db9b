use rayon::prelude::*;
use serde::Serialize;

use crate::attacks::{predict_shifted, uap_compute, AttackConfig, Perturbation};
use crate::data::WindowSet;
use crate::models::Regressor;

use super::{evaluate, AttackReport, EvalError};

/// Log-spaced default grid for [`epsilon_sweep`].
pub const DEFAULT_EPSILON_GRID: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];

/// The six-row transfer table: each model clean, under its own
/// perturbation, and under the other model's perturbation.
///
/// Row order: `(A, none), (A, U_A), (A, U_B), (B, none), (B, U_B), (B, U_A)`.
#[allow(clippy::too_many_arguments)]
pub fn transfer_matrix<A, B>(
    model_a: &A,
    model_b: &B,
    u_a: &Perturbation,
    u_b: &Perturbation,
    data: &WindowSet,
    alpha: f64,
    clamp: bool,
) -> Result<Vec<AttackReport>, EvalError>
where
    A: Regressor + ?Sized,
    B: Regressor + ?Sized,
{
    if model_a.input_dim() != model_b.input_dim() {
        return Err(EvalError::Shape(format!(
            "models disagree on input width ({} vs {})",
            model_a.input_dim(),
            model_b.input_dim()
        )));
    }
    Ok(vec![
        evaluate(model_a, data, None, alpha, clamp)?,
        evaluate(model_a, data, Some(u_a), alpha, clamp)?,
        evaluate(model_a, data, Some(u_b), alpha, clamp)?,
        evaluate(model_b, data, None, alpha, clamp)?,
        evaluate(model_b, data, Some(u_b), alpha, clamp)?,
        evaluate(model_b, data, Some(u_a), alpha, clamp)?,
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub fooling_percentage: f64,
    pub mape: f64,
    pub achieved_fooling: f64,
    pub epochs_run: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub model: String,
    pub rows: Vec<SweepRow>,
}

/// Computes a fresh perturbation on `attack_set` for every epsilon (same
/// shuffle seed) and scores it on `eval_set`. Rows follow `epsilons`.
pub fn epsilon_sweep<R: Regressor + ?Sized>(
    model: &R,
    attack_set: &WindowSet,
    eval_set: &WindowSet,
    epsilons: &[f64],
    cfg: &AttackConfig,
) -> Result<SweepResult, EvalError> {
    if epsilons.is_empty() {
        return Err(EvalError::Config("empty epsilon grid".into()));
    }
    if epsilons.iter().any(|e| !(*e >= 0.0)) || epsilons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EvalError::Config(format!(
            "epsilon grid must be non-negative and strictly increasing: {epsilons:?}"
        )));
    }
    let rows = epsilons
        .par_iter()
        .map(|&epsilon| -> Result<SweepRow, EvalError> {
            let cfg = AttackConfig {
                epsilon,
                ..cfg.clone()
            };
            let u = uap_compute(model, attack_set, &cfg)?;
            let report = evaluate(model, eval_set, Some(&u), cfg.alpha, cfg.clamp_inputs)?;
            Ok(SweepRow {
                epsilon,
                fooling_percentage: report.fooling_percentage,
                mape: report.mape,
                achieved_fooling: u.achieved_fooling,
                epochs_run: u.epochs_run,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        model: model.label(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub engine_id: u32,
    pub cycle: u32,
    pub true_rul: f64,
    pub pred_clean: f64,
    pub pred_attacked: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Trajectory {
    /// One row per window of each requested engine.
    pub rows: Vec<TrajectoryRow>,
    /// The last window of every engine in the data.
    pub last_windows: Vec<TrajectoryRow>,
    /// Requested engines without any window (shorter than `m` or absent).
    pub skipped: Vec<u32>,
}

fn trajectory_rows<R: Regressor + ?Sized>(
    model: &R,
    set: &WindowSet,
    u: Option<&[f64]>,
    clamp: bool,
) -> Result<Vec<TrajectoryRow>, EvalError> {
    let inputs = set.inputs();
    let clean = predict_shifted(model, &inputs, None, clamp)?;
    let attacked = match u {
        None => clean.clone(),
        Some(u) => predict_shifted(model, &inputs, Some(u), clamp)?,
    };
    Ok(set
        .windows
        .iter()
        .zip(clean.iter().zip(&attacked))
        .map(|(w, (&c, &a))| TrajectoryRow {
            engine_id: w.engine_id,
            cycle: w.end_cycle,
            true_rul: w.y,
            pred_clean: c,
            pred_attacked: a,
        })
        .collect())
}

/// Per-cycle true and predicted RUL for the listed engines, plus the
/// fleet-wide last-window comparison.
pub fn trajectory_report<R: Regressor + ?Sized>(
    model: &R,
    data: &WindowSet,
    engine_ids: &[u32],
    perturbation: Option<&Perturbation>,
    clamp: bool,
) -> Result<Trajectory, EvalError> {
    if let Some(p) = perturbation {
        if (p.m, p.n) != (data.m, data.n) {
            return Err(EvalError::Shape(format!(
                "perturbation is {}x{}, windows are {}x{}",
                p.m, p.n, data.m, data.n
            )));
        }
    }
    let u = perturbation.map(|p| p.values.as_slice());
    let mut out = Trajectory::default();
    for &id in engine_ids {
        let set = data.for_engine(id);
        if set.is_empty() {
            log::warn!("engine {id}: no {}-cycle window, skipped", data.m);
            out.skipped.push(id);
            continue;
        }
        out.rows.extend(trajectory_rows(model, &set, u, clamp)?);
    }
    out.last_windows = trajectory_rows(model, &data.last_per_engine(), u, clamp)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub feature: usize,
    pub clean: f64,
    pub attacked: f64,
}

/// Clean and perturbed values of one window, for plotting the inputs.
pub fn input_traces(
    x: &[f64],
    perturbation: &Perturbation,
    clamp: bool,
) -> Result<Vec<TraceRow>, EvalError> {
    let (m, n) = (perturbation.m, perturbation.n);
    if x.len() != m * n {
        return Err(EvalError::Shape(format!(
            "window has {} values, perturbation is {m}x{n}",
            x.len()
        )));
    }
    Ok((0..m * n)
        .map(|i| {
            let mut a = x[i] + perturbation.values[i];
            if clamp {
                a = a.clamp(0.0, 1.0);
            }
            TraceRow {
                step: i / n,
                feature: i % n,
                clean: x[i],
                attacked: a,
            }
        })
        .collect())
}
