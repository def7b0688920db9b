use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{EngineSeries, N_SETTINGS};
use crate::rng;

/// Synthetic fleet generator settings.
///
/// Each non-constant feature of engine `e` follows
/// `a + b * (cycle / T)^c + noise` with per-engine `a`, `b`, `c`, a
/// per-feature degradation direction, and per-feature raw offset and scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_train_engines: usize,
    pub n_test_engines: usize,
    pub n_features: usize,
    /// Channels held constant; placed at evenly spread positions.
    pub n_constant: usize,
    pub min_life: u32,
    pub max_life: u32,
    /// Noise standard deviation relative to the degradation amplitude.
    pub noise_sd: f64,
    /// Test engines are observed for a uniform fraction of their life in this range.
    pub test_observed: (f64, f64),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_train_engines: 100,
            n_test_engines: 100,
            n_features: 21,
            n_constant: 7,
            min_life: 120,
            max_life: 220,
            noise_sd: 0.12,
            test_observed: (0.45, 0.95),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthFleet {
    pub train: Vec<EngineSeries>,
    pub test: Vec<EngineSeries>,
    pub test_rul: Vec<f64>,
}

struct FeatureModel {
    constant: Option<f64>,
    direction: f64,
    offset: f64,
    scale: f64,
}

fn constant_positions(n_features: usize, n_constant: usize) -> Vec<usize> {
    (0..n_constant)
        .map(|k| (2 * k + 1) * n_features / (2 * n_constant))
        .collect()
}

fn feature_models(cfg: &SynthConfig, r: &mut rng::ChaCha8Rng) -> Vec<FeatureModel> {
    let n_constant = cfg.n_constant.min(cfg.n_features.saturating_sub(1));
    let constants = constant_positions(cfg.n_features, n_constant);
    (0..cfg.n_features)
        .map(|j| {
            let direction = if r.random_bool(0.5) { 1.0 } else { -1.0 };
            let offset = r.random_range(-50.0..500.0);
            let scale = r.random_range(0.5..20.0);
            FeatureModel {
                constant: constants.contains(&j).then_some(offset),
                direction,
                offset,
                scale,
            }
        })
        .collect()
}

fn engine(
    id: u32,
    life: u32,
    observed: u32,
    features: &[FeatureModel],
    noise_sd: f64,
    r: &mut rng::ChaCha8Rng,
) -> EngineSeries {
    let noise = Normal::new(0.0, noise_sd.max(0.0)).expect("finite noise sd");
    let setting_noise = Normal::new(0.0, 1e-3).expect("finite");
    let shape: Vec<(f64, f64, f64)> = features
        .iter()
        .map(|f| {
            let a = r.random_range(-0.1..0.1);
            let b = f.direction * r.random_range(0.6..1.0);
            let c = r.random_range(1.5..3.0);
            (a, b, c)
        })
        .collect();
    let mut e = EngineSeries {
        engine_id: id,
        cycles: Vec::with_capacity(observed as usize),
        op_settings: Vec::with_capacity(observed as usize),
        sensors: Vec::with_capacity(observed as usize),
    };
    for cycle in 1..=observed {
        let frac = f64::from(cycle) / f64::from(life);
        let row = features
            .iter()
            .zip(&shape)
            .map(|(f, &(a, b, c))| match f.constant {
                Some(v) => v,
                None => f.offset + f.scale * (a + b * frac.powf(c) + noise.sample(r)),
            })
            .collect();
        let mut settings = [0.0; N_SETTINGS];
        for s in &mut settings {
            *s = setting_noise.sample(r);
        }
        e.cycles.push(cycle);
        e.op_settings.push(settings);
        e.sensors.push(row);
    }
    e
}

/// Run-to-failure engines with the default shape settings; two channels
/// are constant when `n_features >= 3`.
pub fn synth_generate(n_engines: usize, n_features: usize, seed: u64) -> Vec<EngineSeries> {
    let cfg = SynthConfig {
        n_train_engines: n_engines,
        n_test_engines: 0,
        n_features,
        n_constant: 2,
        seed,
        ..Default::default()
    };
    synth_fleet(&cfg).train
}

/// Train (run to failure) and test (truncated) engines plus test final RULs.
pub fn synth_fleet(cfg: &SynthConfig) -> SynthFleet {
    let mut r = rng::seeded(cfg.seed);
    let features = feature_models(cfg, &mut r);
    let (lo, hi) = (cfg.min_life.min(cfg.max_life), cfg.max_life.max(cfg.min_life));
    let train = (0..cfg.n_train_engines)
        .map(|k| {
            let life = r.random_range(lo..=hi);
            engine(k as u32 + 1, life, life, &features, cfg.noise_sd, &mut r)
        })
        .collect();
    let mut test = Vec::with_capacity(cfg.n_test_engines);
    let mut test_rul = Vec::with_capacity(cfg.n_test_engines);
    let (f_lo, f_hi) = cfg.test_observed;
    for k in 0..cfg.n_test_engines {
        let life = r.random_range(lo..=hi);
        let frac = if f_hi > f_lo {
            r.random_range(f_lo..f_hi)
        } else {
            f_lo
        };
        let observed = ((f64::from(life) * frac).round() as u32).clamp(1, life);
        test.push(engine(k as u32 + 1, life, observed, &features, cfg.noise_sd, &mut r));
        test_rul.push(f64::from(life - observed));
    }
    SynthFleet {
        train,
        test,
        test_rul,
    }
}
