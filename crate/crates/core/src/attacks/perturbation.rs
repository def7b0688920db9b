use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AttackError;

pub const PERTURBATION_VERSION: u32 = 1;

/// A universal perturbation `U` of shape `m x n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    pub m: usize,
    pub n: usize,
    /// Row-major `m x n`.
    pub values: Vec<f64>,
    pub epsilon: f64,
    pub alpha: f64,
    pub source_model: String,
    /// Fooling ratio in `[0, 1]` on the data `U` was computed from.
    pub achieved_fooling: f64,
    pub epochs_run: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbationFile {
    format_version: u32,
    shape: [usize; 2],
    epsilon: f64,
    alpha: f64,
    source_model: String,
    achieved_fooling: f64,
    epochs_run: usize,
    values: Vec<Vec<f64>>,
}

impl Perturbation {
    pub fn zeros(m: usize, n: usize, source_model: impl Into<String>) -> Self {
        Self {
            m,
            n,
            values: vec![0.0; m * n],
            epsilon: 0.0,
            alpha: 0.0,
            source_model: source_model.into(),
            achieved_fooling: 0.0,
            epochs_run: 0,
        }
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    pub fn to_json(&self) -> String {
        let file = PerturbationFile {
            format_version: PERTURBATION_VERSION,
            shape: [self.m, self.n],
            epsilon: self.epsilon,
            alpha: self.alpha,
            source_model: self.source_model.clone(),
            achieved_fooling: self.achieved_fooling,
            epochs_run: self.epochs_run,
            values: self.values.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect(),
        };
        serde_json::to_string_pretty(&file).expect("perturbation serializes")
    }

    /// Parses and validates shape, version and the norm bound.
    pub fn from_json(text: &str) -> Result<Self, AttackError> {
        let f: PerturbationFile =
            serde_json::from_str(text).map_err(|e| AttackError::Format(e.to_string()))?;
        if f.format_version != PERTURBATION_VERSION {
            return Err(AttackError::Format(format!(
                "unsupported format_version {}",
                f.format_version
            )));
        }
        let [m, n] = f.shape;
        if f.values.len() != m || f.values.iter().any(|r| r.len() != n) {
            return Err(AttackError::Format(format!("values are not {m}x{n}")));
        }
        let p = Self {
            m,
            n,
            values: f.values.into_iter().flatten().collect(),
            epsilon: f.epsilon,
            alpha: f.alpha,
            source_model: f.source_model,
            achieved_fooling: f.achieved_fooling,
            epochs_run: f.epochs_run,
        };
        if !(p.epsilon >= 0.0) || p.linf() > p.epsilon {
            return Err(AttackError::Format(format!(
                "max |u| = {} exceeds epsilon {}",
                p.linf(),
                p.epsilon
            )));
        }
        if !(0.0..=1.0).contains(&p.achieved_fooling) {
            return Err(AttackError::Format("achieved_fooling outside [0, 1]".into()));
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<(), AttackError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, AttackError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
