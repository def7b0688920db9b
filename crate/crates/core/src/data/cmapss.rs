use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{DataError, EngineSeries};

pub const N_SETTINGS: usize = 3;
pub const N_SENSORS: usize = 21;
/// unit, cycle, 3 operating settings, 21 sensors.
pub const N_COLUMNS: usize = 2 + N_SETTINGS + N_SENSORS;

#[derive(Clone, Debug, PartialEq)]
pub struct CmapssData {
    pub train: Vec<EngineSeries>,
    pub test: Vec<EngineSeries>,
    /// RUL after the last observed cycle of each test engine, in engine order.
    pub test_rul: Vec<f64>,
}

fn read(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|err| DataError::Io {
        path: path.display().to_string(),
        err,
    })
}

pub fn load_cmapss(train_path: &Path, test_path: &Path, rul_path: &Path) -> Result<CmapssData, DataError> {
    let train = parse_series(&read(train_path)?, &train_path.display().to_string())?;
    let test = parse_series(&read(test_path)?, &test_path.display().to_string())?;
    let test_rul = load_rul_file(rul_path)?;
    if test_rul.len() != test.len() {
        return Err(DataError::Structure {
            source_name: rul_path.display().to_string(),
            msg: format!(
                "{} RUL values for {} test engines",
                test_rul.len(),
                test.len()
            ),
        });
    }
    Ok(CmapssData {
        train,
        test,
        test_rul,
    })
}

pub fn load_rul_file(path: &Path) -> Result<Vec<f64>, DataError> {
    parse_rul(&read(path)?, &path.display().to_string())
}

pub fn parse_rul(text: &str, source_name: &str) -> Result<Vec<f64>, DataError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        let v: f64 = tok.parse().map_err(|_| DataError::Parse {
            source_name: source_name.to_string(),
            line: i + 1,
            msg: format!("RUL `{tok}` is not a number"),
        })?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(DataError::Parse {
                source_name: source_name.to_string(),
                line: i + 1,
                msg: format!("RUL must be a non-negative number, got {v}"),
            });
        }
        out.push(v);
    }
    Ok(out)
}

fn as_index(v: f64, what: &str, source_name: &str, line: usize) -> Result<u32, DataError> {
    if v.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&v) {
        return Err(DataError::Parse {
            source_name: source_name.to_string(),
            line,
            msg: format!("{what} must be a positive integer, got {v}"),
        });
    }
    Ok(v as u32)
}

/// Parses whitespace-separated C-MAPSS rows, grouping them by engine.
///
/// Rows of one engine must be contiguous with cycles `1, 2, ...`, and
/// engine ids must cover `1..=K` without gaps.
pub fn parse_series(text: &str, source_name: &str) -> Result<Vec<EngineSeries>, DataError> {
    let mut engines: Vec<EngineSeries> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut vals = Vec::with_capacity(N_COLUMNS);
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| DataError::Parse {
                source_name: source_name.to_string(),
                line: lineno,
                msg: format!("non-numeric token `{tok}`"),
            })?;
            vals.push(v);
        }
        if vals.len() != N_COLUMNS {
            return Err(DataError::Parse {
                source_name: source_name.to_string(),
                line: lineno,
                msg: format!("expected {N_COLUMNS} columns, found {}", vals.len()),
            });
        }
        let unit = as_index(vals[0], "unit", source_name, lineno)?;
        let cycle = as_index(vals[1], "cycle", source_name, lineno)?;
        let settings = [vals[2], vals[3], vals[4]];
        let sensors = vals[2 + N_SETTINGS..].to_vec();

        let start_new = engines.last().is_none_or(|e| e.engine_id != unit);
        if start_new {
            if engines.iter().any(|e| e.engine_id == unit) {
                return Err(DataError::Parse {
                    source_name: source_name.to_string(),
                    line: lineno,
                    msg: format!("rows of engine {unit} are not contiguous"),
                });
            }
            engines.push(EngineSeries {
                engine_id: unit,
                cycles: Vec::new(),
                op_settings: Vec::new(),
                sensors: Vec::new(),
            });
        }
        let e = engines.last_mut().expect("engine pushed");
        let expected = e.cycles.len() as u32 + 1;
        if cycle != expected {
            return Err(DataError::Parse {
                source_name: source_name.to_string(),
                line: lineno,
                msg: format!("engine {unit}: expected cycle {expected}, found {cycle}"),
            });
        }
        e.cycles.push(cycle);
        e.op_settings.push(settings);
        e.sensors.push(sensors);
    }
    if engines.is_empty() {
        return Err(DataError::Structure {
            source_name: source_name.to_string(),
            msg: "no rows".into(),
        });
    }
    engines.sort_by_key(|e| e.engine_id);
    for (k, e) in engines.iter().enumerate() {
        let want = k as u32 + 1;
        if e.engine_id != want {
            return Err(DataError::Structure {
                source_name: source_name.to_string(),
                msg: format!("missing engine {want}"),
            });
        }
    }
    Ok(engines)
}

/// Writes series back in C-MAPSS text form. Values use shortest round-trip
/// formatting, so `parse_series(write_series(s))` reproduces `s`.
pub fn write_series(series: &[EngineSeries]) -> String {
    let mut out = String::new();
    for e in series {
        for (k, &cycle) in e.cycles.iter().enumerate() {
            write!(out, "{} {}", e.engine_id, cycle).unwrap();
            for v in e.op_settings[k].iter().chain(&e.sensors[k]) {
                write!(out, " {v:?}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}
