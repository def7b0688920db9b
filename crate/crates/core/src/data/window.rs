use super::{DataError, EngineSeries, NormStats};

/// One model input: `m` consecutive normalized rows ending at `end_cycle`.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    /// Row-major `m x n`, values in `[0, 1]`.
    pub x: Vec<f64>,
    /// Remaining useful life in cycles after `end_cycle`.
    pub y: f64,
    pub engine_id: u32,
    pub end_cycle: u32,
}

/// How to label windows.
#[derive(Clone, Copy, Debug)]
pub enum RulLabels<'a> {
    /// Series run to failure: the last cycle has RUL 0.
    RunToFailure,
    /// Series truncated; `final_rul[i]` is the RUL after the last observed
    /// cycle of series `i`.
    FinalRul(&'a [f64]),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WindowSet {
    pub m: usize,
    pub n: usize,
    /// Ordered by `(engine_id, end_cycle)`.
    pub windows: Vec<Window>,
    /// Engines with fewer than `m` cycles.
    pub skipped_engines: Vec<u32>,
    /// Normalized values that fell outside `[0, 1]` before clamping.
    pub clamped_values: usize,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn inputs(&self) -> Vec<&[f64]> {
        self.windows.iter().map(|w| w.x.as_slice()).collect()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.windows.iter().map(|w| w.y).collect()
    }

    /// Copy holding only the windows at `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> WindowSet {
        WindowSet {
            m: self.m,
            n: self.n,
            windows: idx.iter().map(|&i| self.windows[i].clone()).collect(),
            skipped_engines: self.skipped_engines.clone(),
            clamped_values: self.clamped_values,
        }
    }

    /// The last window of every engine.
    pub fn last_per_engine(&self) -> WindowSet {
        let idx: Vec<usize> = (0..self.windows.len())
            .filter(|&i| {
                self.windows
                    .get(i + 1)
                    .is_none_or(|next| next.engine_id != self.windows[i].engine_id)
            })
            .collect();
        self.select(&idx)
    }

    pub fn for_engine(&self, engine_id: u32) -> WindowSet {
        let idx: Vec<usize> = (0..self.windows.len())
            .filter(|&i| self.windows[i].engine_id == engine_id)
            .collect();
        self.select(&idx)
    }
}

/// Stride-1 windows of length `m` over each engine.
///
/// Labels are `failure_cycle - end_cycle`, where the failure cycle is the
/// last cycle for run-to-failure series and `last + final_rul` for truncated
/// ones, optionally capped at `rul_cap`.
pub fn make_windows(
    series: &[EngineSeries],
    stats: &NormStats,
    m: usize,
    labels: RulLabels<'_>,
    rul_cap: Option<f64>,
) -> Result<WindowSet, DataError> {
    if m < 1 {
        return Err(DataError::Config("window length must be >= 1".into()));
    }
    if let RulLabels::FinalRul(r) = labels {
        if r.len() != series.len() {
            return Err(DataError::Config(format!(
                "{} final RUL values for {} series",
                r.len(),
                series.len()
            )));
        }
    }
    let n = stats.n_features();
    let mut set = WindowSet {
        m,
        n,
        ..Default::default()
    };
    for (k, e) in series.iter().enumerate() {
        if e.len() < m {
            set.skipped_engines.push(e.engine_id);
            continue;
        }
        let mut rows = Vec::with_capacity(e.len() * n);
        for raw in &e.sensors {
            if raw.len() != stats.n_raw {
                return Err(DataError::Structure {
                    source_name: format!("engine {}", e.engine_id),
                    msg: format!("sensor row has {} values, stats expect {}", raw.len(), stats.n_raw),
                });
            }
            set.clamped_values += stats.normalize_row(raw, &mut rows);
        }
        let failure = f64::from(e.last_cycle())
            + match labels {
                RulLabels::RunToFailure => 0.0,
                RulLabels::FinalRul(r) => r[k],
            };
        for end in m..=e.len() {
            let end_cycle = e.cycles[end - 1];
            let mut y = failure - f64::from(end_cycle);
            if let Some(cap) = rul_cap {
                y = y.min(cap);
            }
            set.windows.push(Window {
                x: rows[(end - m) * n..end * n].to_vec(),
                y,
                engine_id: e.engine_id,
                end_cycle,
            });
        }
    }
    if !set.skipped_engines.is_empty() {
        log::warn!(
            "{} engine(s) shorter than the {m}-cycle window were skipped",
            set.skipped_engines.len()
        );
    }
    if set.windows.is_empty() {
        return Err(DataError::Config(format!(
            "no engine has at least {m} cycles"
        )));
    }
    Ok(set)
}
