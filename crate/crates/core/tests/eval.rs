use rul_uap::attacks::{AttackConfig, Perturbation};
use rul_uap::data::{fit_norm, make_windows, synth_fleet, RulLabels, SynthConfig, WindowSet};
use rul_uap::eval::{
    epsilon_sweep, evaluate, input_traces, report_csv, sweep_csv, trajectory_report,
    transfer_matrix, EvalError, NO_ATTACK,
};
use rul_uap::models::{predict_all, Arch, ModelParams};

fn fixture() -> (ModelParams, ModelParams, WindowSet) {
    let f = synth_fleet(&SynthConfig {
        n_train_engines: 4,
        n_test_engines: 6,
        n_features: 5,
        n_constant: 1,
        seed: 9,
        ..Default::default()
    });
    let stats = fit_norm(&f.train).unwrap();
    let test = make_windows(&f.test, &stats, 12, RulLabels::FinalRul(&f.test_rul), None).unwrap();
    let a = ModelParams::init(Arch::Lstm, 4, 4, 1).with_output_scale(80.0);
    let b = ModelParams::init(Arch::Gru, 4, 4, 2).with_output_scale(80.0);
    (a, b, test)
}

fn constant_u(set: &WindowSet, v: f64, src: &str) -> Perturbation {
    let mut p = Perturbation::zeros(set.m, set.n, src);
    p.values = vec![v; set.m * set.n];
    p.epsilon = v.abs();
    p
}

#[test]
fn no_attack_report_is_the_model_itself() {
    let (a, _, set) = fixture();
    let r = evaluate(&a, &set, None, 0.1, false).unwrap();
    assert_eq!(r.attack, NO_ATTACK);
    let direct = predict_all(&a, &set.inputs()).unwrap();
    let scored: Vec<f64> = set
        .windows
        .iter()
        .zip(&direct)
        .filter(|(w, _)| w.y > 0.0)
        .map(|(_, &p)| p)
        .collect();
    let clean: Vec<f64> = r.rows.iter().map(|s| s.pred_clean).collect();
    let attacked: Vec<f64> = r.rows.iter().map(|s| s.pred_attacked).collect();
    assert_eq!(clean, scored);
    assert_eq!(attacked, scored);
    assert_eq!(r.rows.len(), r.n_samples);
    assert_eq!(r.n_samples + r.n_excluded, set.len());
}

#[test]
fn transfer_matrix_layout_and_zero_perturbations() {
    let (a, b, set) = fixture();
    let za = Perturbation::zeros(set.m, set.n, "LSTM");
    let zb = Perturbation::zeros(set.m, set.n, "GRU");
    let rows = transfer_matrix(&a, &b, &za, &zb, &set, 0.1, false).unwrap();
    let layout: Vec<(&str, &str)> = rows.iter().map(|r| (r.model.as_str(), r.attack.as_str())).collect();
    assert_eq!(
        layout,
        [
            ("LSTM", "None"),
            ("LSTM", "LSTM"),
            ("LSTM", "GRU"),
            ("GRU", "None"),
            ("GRU", "GRU"),
            ("GRU", "LSTM")
        ]
    );
    for r in &rows[1..3] {
        assert_eq!(r.fooling_percentage, rows[0].fooling_percentage);
        assert_eq!(r.mape, rows[0].mape);
    }
    for r in &rows[4..6] {
        assert_eq!(r.fooling_percentage, rows[3].fooling_percentage);
    }
    assert_eq!(report_csv(&rows).lines().count(), 7);

    // baselines do not depend on the supplied perturbations
    let other = transfer_matrix(&a, &b, &constant_u(&set, 0.3, "LSTM"), &zb, &set, 0.1, false).unwrap();
    assert_eq!(other[0], rows[0]);
    assert_eq!(other[3], rows[3]);
}

#[test]
fn transfer_needs_matching_models() {
    let (a, _, set) = fixture();
    let wide = ModelParams::init(Arch::Gru, 7, 3, 0);
    let z = Perturbation::zeros(set.m, set.n, "x");
    assert!(matches!(
        transfer_matrix(&a, &wide, &z, &z, &set, 0.1, false),
        Err(EvalError::Shape(_))
    ));
}

#[test]
fn sweep_rows_follow_the_grid_and_zero_is_baseline() {
    let (a, _, set) = fixture();
    let grid = [0.0, 1e-3, 1e-1];
    let cfg = AttackConfig { e_fool: 1, ..Default::default() };
    let res = epsilon_sweep(&a, &set, &set, &grid, &cfg).unwrap();
    let eps: Vec<f64> = res.rows.iter().map(|r| r.epsilon).collect();
    assert_eq!(eps, grid);
    let base = evaluate(&a, &set, None, cfg.alpha, false).unwrap();
    assert_eq!(res.rows[0].fooling_percentage, base.fooling_percentage);
    assert_eq!(res.rows[0].mape, base.mape);
    assert_eq!(sweep_csv(&res).lines().count(), 4);
    assert!(epsilon_sweep(&a, &set, &set, &[1e-2, 1e-3], &cfg).is_err());
    assert!(epsilon_sweep(&a, &set, &set, &[], &cfg).is_err());
}

#[test]
fn trajectory_rows_per_engine_and_skips() {
    let (a, _, set) = fixture();
    let id = set.windows[0].engine_id;
    let n_windows = set.windows.iter().filter(|w| w.engine_id == id).count();
    let traj = trajectory_report(&a, &set, &[id, 999], None, false).unwrap();
    assert_eq!(traj.rows.len(), n_windows);
    assert_eq!(traj.skipped, vec![999]);
    assert!(traj.rows.iter().all(|r| r.pred_clean == r.pred_attacked));
    let engines = set.windows.iter().map(|w| w.engine_id).collect::<std::collections::BTreeSet<_>>();
    assert_eq!(traj.last_windows.len(), engines.len());
}

#[test]
fn traces_hold_clean_and_shifted_values() {
    let (_, _, set) = fixture();
    let u = constant_u(&set, 0.01, "x");
    let rows = input_traces(&set.windows[0].x, &u, false).unwrap();
    assert_eq!(rows.len(), set.m * set.n);
    assert!(rows.iter().all(|r| r.attacked == r.clean + 0.01));
    assert!(input_traces(&[0.0; 3], &u, false).is_err());
}

#[test]
fn reports_are_deterministic() {
    let (a, b, set) = fixture();
    let ua = constant_u(&set, 0.02, "LSTM");
    let ub = constant_u(&set, -0.02, "GRU");
    let one = report_csv(&transfer_matrix(&a, &b, &ua, &ub, &set, 0.1, false).unwrap());
    let two = report_csv(&transfer_matrix(&a, &b, &ua, &ub, &set, 0.1, false).unwrap());
    assert_eq!(one, two);
}
