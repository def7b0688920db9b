use proptest::prelude::*;
use rul_uap::data::{
    fit_norm, make_windows, parse_series, synth_fleet, synth_generate, write_series, DataError,
    RulLabels, SynthConfig, WindowSet, N_SENSORS,
};

/// Ordinary least squares on `[1, features]` via normal equations and
/// Gaussian elimination with partial pivoting.
fn least_squares(rows: &[Vec<f64>], ys: &[f64]) -> Vec<f64> {
    let k = rows[0].len() + 1;
    let mut a = vec![vec![0.0; k + 1]; k];
    for (r, &y) in rows.iter().zip(ys) {
        let x: Vec<f64> = std::iter::once(1.0).chain(r.iter().copied()).collect();
        for i in 0..k {
            for j in 0..k {
                a[i][j] += x[i] * x[j];
            }
            a[i][k] += x[i] * y;
        }
    }
    for i in 0..k {
        a[i][i] += 1e-9;
    }
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for j in c..=k {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    (0..k).map(|i| a[i][k] / a[i][i]).collect()
}

fn summary_features(set: &WindowSet, w: &[f64]) -> Vec<f64> {
    // per-feature mean over the last 5 steps
    let (m, n) = (set.m, set.n);
    (0..n)
        .map(|j| (m - 5..m).map(|t| w[t * n + j]).sum::<f64>() / 5.0)
        .collect()
}

#[test]
fn synthetic_fleet_is_learnable_by_a_linear_model() {
    let f = synth_fleet(&SynthConfig {
        n_train_engines: 40,
        n_test_engines: 40,
        seed: 6,
        ..Default::default()
    });
    let stats = fit_norm(&f.train).unwrap();
    let train = make_windows(&f.train, &stats, 30, RulLabels::RunToFailure, None).unwrap();
    let test = make_windows(&f.test, &stats, 30, RulLabels::FinalRul(&f.test_rul), None).unwrap();
    let rows: Vec<Vec<f64>> = train.windows.iter().map(|w| summary_features(&train, &w.x)).collect();
    let beta = least_squares(&rows, &train.labels());
    let mut ape = 0.0;
    let mut n = 0;
    for w in test.windows.iter().filter(|w| w.y > 0.0) {
        let x = summary_features(&test, &w.x);
        let pred = beta[0] + x.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
        ape += (pred - w.y).abs() / w.y;
        n += 1;
    }
    let mape = 100.0 * ape / n as f64;
    assert!(mape < 40.0, "linear oracle test MAPE {mape:.2}%");
}

#[test]
fn fd001_shaped_surrogate_keeps_fourteen_sensors() {
    let f = synth_fleet(&SynthConfig::default());
    assert_eq!(f.train.len(), 100);
    assert_eq!(f.test.len(), 100);
    assert!(f.train.iter().all(|e| e.n_sensors() == N_SENSORS));
    assert_eq!(fit_norm(&f.train).unwrap().n_features(), 14);
}

#[test]
fn normalization_is_fitted_on_train_only() {
    let f = synth_fleet(&SynthConfig {
        n_train_engines: 10,
        n_test_engines: 10,
        n_features: 5,
        n_constant: 1,
        seed: 2,
        ..Default::default()
    });
    let train_stats = fit_norm(&f.train).unwrap();
    // shift the test range outside the train range
    let mut shifted = f.test.clone();
    for e in &mut shifted {
        for row in &mut e.sensors {
            for v in row.iter_mut() {
                *v += 1000.0;
            }
        }
    }
    let both: Vec<_> = f.train.iter().chain(&shifted).cloned().collect();
    let leaked = fit_norm(&both).unwrap();
    assert_ne!(train_stats, leaked);

    let rul: Vec<f64> = f.test_rul.clone();
    let test = make_windows(&shifted, &train_stats, 10, RulLabels::FinalRul(&rul), None).unwrap();
    assert!(test.clamped_values > 0);
    assert!(test.windows.iter().all(|w| w.x.iter().all(|v| (0.0..=1.0).contains(v))));

    let train = make_windows(&f.train, &train_stats, 10, RulLabels::RunToFailure, None).unwrap();
    assert_eq!(train.clamped_values, 0);
    for j in 0..train.n {
        let col = train.windows.iter().flat_map(|w| w.x.iter().skip(j).step_by(train.n));
        let (lo, hi) = col.fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        assert_eq!((lo, hi), (0.0, 1.0), "feature {j}");
    }
}

#[test]
fn generator_constant_channels_are_exactly_the_dropped_ones() {
    let s = synth_generate(5, 9, 4);
    let stats = fit_norm(&s).unwrap();
    assert_eq!(stats.n_features(), 7);
}

#[test]
fn bad_rows_cite_their_line() {
    let good = "1 1 0 0 100 ".to_string() + &"1.0 ".repeat(21);
    let short = "1 2 0 0 100 ".to_string() + &"1.0 ".repeat(20);
    let text = format!("{good}\n{short}\n");
    let err = parse_series(&text, "train_FD001.txt").unwrap_err();
    assert!(matches!(err, DataError::Parse { line: 2, .. }));
    assert!(err.to_string().contains("train_FD001.txt:2"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn loader_round_trip(seed in 0u64..1000, engines in 1usize..4) {
        let s = synth_generate(engines, 21, seed);
        let text = write_series(&s);
        let back = parse_series(&text, "mem").unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn window_count_per_engine(seed in 0u64..1000, m in 1usize..240) {
        let s = synth_generate(3, 6, seed);
        let stats = fit_norm(&s).unwrap();
        let longest = s.iter().map(|e| e.len()).max().unwrap();
        let set = match make_windows(&s, &stats, m, RulLabels::RunToFailure, None) {
            Ok(set) => set,
            Err(DataError::Config(_)) if m > longest => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        for e in &s {
            let got = set.windows.iter().filter(|w| w.engine_id == e.engine_id).count();
            prop_assert_eq!(got, (e.len() + 1).saturating_sub(m));
            prop_assert_eq!(set.skipped_engines.contains(&e.engine_id), e.len() < m);
        }
        prop_assert!(set.windows.iter().all(|w| w.y >= 0.0));
    }
}
