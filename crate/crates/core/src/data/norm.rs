use serde::{Deserialize, Serialize};

use super::{DataError, EngineSeries};

/// Min-max statistics over the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    /// Sensor columns kept, as indices into the raw sensor row.
    pub retained: Vec<usize>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Width of the raw sensor row the stats were fitted on.
    pub n_raw: usize,
}

/// Drops zero-variance sensors and records min/max for the rest.
pub fn fit_norm(train: &[EngineSeries]) -> Result<NormStats, DataError> {
    let n_raw = train
        .iter()
        .find(|e| !e.is_empty())
        .map(EngineSeries::n_sensors)
        .ok_or(DataError::Empty("training series"))?;
    let mut lo = vec![f64::INFINITY; n_raw];
    let mut hi = vec![f64::NEG_INFINITY; n_raw];
    for e in train {
        for row in &e.sensors {
            if row.len() != n_raw {
                return Err(DataError::Structure {
                    source_name: format!("engine {}", e.engine_id),
                    msg: format!("sensor row has {} values, expected {n_raw}", row.len()),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
    }
    let retained: Vec<usize> = (0..n_raw).filter(|&j| hi[j] > lo[j]).collect();
    if retained.is_empty() {
        return Err(DataError::AllConstant);
    }
    Ok(NormStats {
        min: retained.iter().map(|&j| lo[j]).collect(),
        max: retained.iter().map(|&j| hi[j]).collect(),
        retained,
        n_raw,
    })
}

impl NormStats {
    pub fn n_features(&self) -> usize {
        self.retained.len()
    }

    /// Scales one raw sensor row into `out`, clamping to `[0, 1]`.
    /// Returns how many values had to be clamped.
    pub fn normalize_row(&self, raw: &[f64], out: &mut Vec<f64>) -> usize {
        let mut clamped = 0;
        for (k, &j) in self.retained.iter().enumerate() {
            let v = (raw[j] - self.min[k]) / (self.max[k] - self.min[k]);
            if !(0.0..=1.0).contains(&v) {
                clamped += 1;
            }
            out.push(v.clamp(0.0, 1.0));
        }
        clamped
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(id: u32, rows: Vec<Vec<f64>>) -> EngineSeries {
        let n = rows.len();
        EngineSeries {
            engine_id: id,
            cycles: (1..=n as u32).collect(),
            op_settings: vec![[0.0; 3]; n],
            sensors: rows,
        }
    }

    #[test]
    fn constant_column_is_dropped() {
        let e = engine(1, vec![vec![1.0, 5.0, 2.0], vec![3.0, 5.0, 0.0]]);
        let s = fit_norm(&[e]).unwrap();
        assert_eq!(s.retained, vec![0, 2]);
        assert_eq!(s.min, vec![1.0, 0.0]);
        assert_eq!(s.max, vec![3.0, 2.0]);
    }

    #[test]
    fn extremes_map_to_unit_interval() {
        let e = engine(1, vec![vec![1.0, -2.0], vec![3.0, 4.0], vec![2.0, 0.0]]);
        let s = fit_norm(std::slice::from_ref(&e)).unwrap();
        let mut lo = Vec::new();
        s.normalize_row(&[1.0, -2.0], &mut lo);
        let mut hi = Vec::new();
        s.normalize_row(&[3.0, 4.0], &mut hi);
        assert_eq!(lo, vec![0.0, 0.0]);
        assert_eq!(hi, vec![1.0, 1.0]);
    }

    #[test]
    fn out_of_range_values_are_clamped_and_counted() {
        let s = fit_norm(&[engine(1, vec![vec![0.0], vec![10.0]])]).unwrap();
        let mut out = Vec::new();
        assert_eq!(s.normalize_row(&[12.0], &mut out), 1);
        assert_eq!(s.normalize_row(&[-1.0], &mut out), 1);
        assert_eq!(s.normalize_row(&[5.0], &mut out), 0);
        assert_eq!(out, vec![1.0, 0.0, 0.5]);
    }

    #[test]
    fn all_constant_is_an_error() {
        let e = engine(1, vec![vec![1.0, 2.0], vec![1.0, 2.0]]);
        assert!(matches!(fit_norm(&[e]), Err(DataError::AllConstant)));
        assert!(matches!(fit_norm(&[]), Err(DataError::Empty(_))));
    }
}
