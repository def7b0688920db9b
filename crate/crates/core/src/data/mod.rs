//! Run-to-failure fleets: C-MAPSS text ingestion, min-max scaling fitted on
//! the training split, stride-1 windowing with RUL labels, and a synthetic
//! degradation generator.

mod cmapss;
mod norm;
mod synth;
mod window;

use thiserror::Error;

pub use cmapss::{
    load_cmapss, load_rul_file, parse_rul, parse_series, write_series, CmapssData, N_COLUMNS,
    N_SENSORS, N_SETTINGS,
};
pub use norm::{fit_norm, NormStats};
pub use synth::{synth_fleet, synth_generate, SynthConfig, SynthFleet};
pub use window::{make_windows, RulLabels, Window, WindowSet};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },
    #[error("{source_name}: {msg}")]
    Structure { source_name: String, msg: String },
    #[error("every feature is constant over the training split")]
    AllConstant,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid window config: {0}")]
    Config(String),
    #[error("{path}: {err}")]
    Io {
        path: String,
        #[source]
        err: std::io::Error,
    },
}

/// One engine's run, either to failure (train) or truncated (test).
#[derive(Clone, Debug, PartialEq)]
pub struct EngineSeries {
    pub engine_id: u32,
    /// `1..=T`, consecutive.
    pub cycles: Vec<u32>,
    pub op_settings: Vec<[f64; N_SETTINGS]>,
    /// One row of raw sensor readings per cycle.
    pub sensors: Vec<Vec<f64>>,
}

impl EngineSeries {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn last_cycle(&self) -> u32 {
        self.cycles.last().copied().unwrap_or(0)
    }

    pub fn n_sensors(&self) -> usize {
        self.sensors.first().map_or(0, Vec::len)
    }
}
