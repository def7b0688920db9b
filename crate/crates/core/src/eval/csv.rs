//! Fixed-header CSV renderings. Percentages carry two decimals; raw
//! predictions use shortest round-trip formatting.

use std::fmt::Write as _;

use super::{AttackReport, SweepResult, TraceRow, TrajectoryRow};

pub const REPORT_HEADER: &str = "model,attack,fooling_pct,mape,n_samples,n_excluded";
pub const TRAJECTORY_HEADER: &str = "engine_id,cycle,true_rul,pred_clean,pred_attacked";
pub const SWEEP_HEADER: &str = "epsilon,fooling_pct,mape";
pub const TRACES_HEADER: &str = "step,feature,clean,attacked";

pub fn report_csv(reports: &[AttackReport]) -> String {
    let mut s = format!("{REPORT_HEADER}\n");
    for r in reports {
        writeln!(
            s,
            "{},{},{:.2},{:.2},{},{}",
            r.model, r.attack, r.fooling_percentage, r.mape, r.n_samples, r.n_excluded
        )
        .unwrap();
    }
    s
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in &sweep.rows {
        writeln!(s, "{:?},{:.2},{:.2}", r.epsilon, r.fooling_percentage, r.mape).unwrap();
    }
    s
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut s = format!("{TRAJECTORY_HEADER}\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{:?},{:?},{:?}",
            r.engine_id, r.cycle, r.true_rul, r.pred_clean, r.pred_attacked
        )
        .unwrap();
    }
    s
}

/// Same columns as [`trajectory_csv`], one row per engine.
pub fn last_windows_csv(rows: &[TrajectoryRow]) -> String {
    trajectory_csv(rows)
}

pub fn traces_csv(rows: &[TraceRow]) -> String {
    let mut s = format!("{TRACES_HEADER}\n");
    for r in rows {
        writeln!(s, "{},{},{:?},{:?}", r.step, r.feature, r.clean, r.attacked).unwrap();
    }
    s
}
