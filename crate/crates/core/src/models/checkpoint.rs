//! JSON checkpoints.
//!
//! ```json
//! { "format_version": 1, "arch": "lstm",
//!   "dims": { "input_dim": 14, "hidden_dim": 32 },
//!   "seed": 7, "output_scale": 200.0,
//!   "weights": { "b_f": [[...]], "w_xi": [[...], ...], ... } }
//! ```
//!
//! Floats are written in shortest round-trip form, so a reload reproduces
//! every weight bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Tensor;

use super::{Arch, ModelError, ModelParams};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Dims {
    input_dim: usize,
    hidden_dim: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format_version: u32,
    arch: Arch,
    dims: Dims,
    seed: u64,
    output_scale: f64,
    weights: BTreeMap<String, Vec<Vec<f64>>>,
}

pub(crate) fn to_json(params: &ModelParams) -> String {
    let layout = params.arch.layout(params.input_dim, params.hidden_dim);
    let weights = layout
        .iter()
        .zip(params.weights())
        .map(|((name, [_, cols]), w)| {
            let rows = w.data().chunks(*cols).map(<[f64]>::to_vec).collect();
            (name.clone(), rows)
        })
        .collect();
    let file = CheckpointFile {
        format_version: CHECKPOINT_VERSION,
        arch: params.arch,
        dims: Dims {
            input_dim: params.input_dim,
            hidden_dim: params.hidden_dim,
        },
        seed: params.seed,
        output_scale: params.output_scale,
        weights,
    };
    serde_json::to_string_pretty(&file).expect("checkpoint serializes")
}

pub(crate) fn from_json(text: &str) -> Result<ModelParams, ModelError> {
    let mut file: CheckpointFile =
        serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
    if file.format_version != CHECKPOINT_VERSION {
        return Err(ModelError::Format(format!(
            "unsupported format_version {} (expected {CHECKPOINT_VERSION})",
            file.format_version
        )));
    }
    let (n, h) = (file.dims.input_dim, file.dims.hidden_dim);
    if n == 0 || h == 0 {
        return Err(ModelError::Format("dims must be positive".into()));
    }
    if !file.output_scale.is_finite() {
        return Err(ModelError::Format("output_scale must be finite".into()));
    }
    let layout = file.arch.layout(n, h);
    let mut weights = Vec::with_capacity(layout.len());
    for (name, [rows, cols]) in &layout {
        let nested = file
            .weights
            .remove(name)
            .ok_or_else(|| ModelError::Format(format!("missing weight `{name}`")))?;
        if nested.len() != *rows || nested.iter().any(|r| r.len() != *cols) {
            return Err(ModelError::Format(format!(
                "weight `{name}` is not {rows}x{cols}"
            )));
        }
        let t = Tensor::from_rows(&nested).map_err(|e| ModelError::Format(e.to_string()))?;
        weights.push(t);
    }
    if let Some(extra) = file.weights.keys().next() {
        return Err(ModelError::Format(format!(
            "unexpected weight `{extra}` for {}",
            file.arch
        )));
    }
    Ok(ModelParams::from_parts(
        file.arch,
        n,
        h,
        file.seed,
        file.output_scale,
        weights,
    ))
}

pub fn save(params: &ModelParams, path: &Path) -> Result<(), ModelError> {
    fs::write(path, to_json(params))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ModelParams, ModelError> {
    from_json(&fs::read_to_string(path)?)
}

/// Loads a checkpoint and rejects it unless it holds `expected`.
pub fn load_as(path: &Path, expected: Arch) -> Result<ModelParams, ModelError> {
    let p = load(path)?;
    if p.arch != expected {
        return Err(ModelError::ArchMismatch {
            expected,
            found: p.arch,
        });
    }
    Ok(p)
}
