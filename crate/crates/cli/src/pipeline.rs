use std::path::{Path, PathBuf};

use rul_uap::data::{fit_norm, load_cmapss, make_windows, synth_fleet, CmapssData, RulLabels, WindowSet};
use rul_uap::models::{self, Arch, ModelParams};
use rul_uap::rng;

use crate::config::{DataSource, RunConfig, Split};
use crate::error::CliError;

/// Normalized train and test windows for one run.
pub struct Prepared {
    pub train: WindowSet,
    pub test: WindowSet,
}

pub fn load_series(cfg: &RunConfig) -> Result<CmapssData, CliError> {
    cfg.check_paths()?;
    Ok(match &cfg.data {
        DataSource::Cmapss { train, test, rul } => load_cmapss(train, test, rul)?,
        DataSource::Synthetic(s) => {
            let f = synth_fleet(s);
            CmapssData {
                train: f.train,
                test: f.test,
                test_rul: f.test_rul,
            }
        }
    })
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let CmapssData {
        train: train_series,
        test: test_series,
        test_rul,
    } = load_series(cfg)?;
    let stats = fit_norm(&train_series)?;
    let train = make_windows(&train_series, &stats, cfg.window, RulLabels::RunToFailure, cfg.rul_cap)?;
    let test = make_windows(
        &test_series,
        &stats,
        cfg.window,
        RulLabels::FinalRul(&test_rul),
        cfg.rul_cap,
    )?;
    log::info!(
        "data: {} features, {} train windows, {} test windows ({} test engines skipped, {} test values clamped)",
        stats.n_features(),
        train.len(),
        test.len(),
        test.skipped_engines.len(),
        test.clamped_values
    );
    Ok(Prepared { train, test })
}

impl Prepared {
    /// The windows the perturbation is computed on, subsampled when configured.
    pub fn attack_set(&self, cfg: &RunConfig) -> WindowSet {
        let base = match cfg.attack.on {
            Split::Train => &self.train,
            Split::Test => &self.test,
        };
        match cfg.attack.max_windows {
            Some(k) if k < base.len() => {
                let mut r = rng::seeded(cfg.subsample_seed());
                let mut idx = rng::permutation(base.len(), &mut r);
                idx.truncate(k);
                idx.sort_unstable();
                base.select(&idx)
            }
            _ => base.clone(),
        }
    }
}

pub fn checkpoint_path(cfg: &RunConfig, arch: Arch) -> PathBuf {
    cfg.output_dir
        .join(format!("checkpoint_{}.json", arch.label().to_lowercase()))
}

pub fn perturbation_path(cfg: &RunConfig, arch: Arch) -> PathBuf {
    cfg.output_dir
        .join(format!("perturbation_{}.json", arch.label().to_lowercase()))
}

pub fn load_model(path: &Path, data: &WindowSet) -> Result<ModelParams, CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("checkpoint not found: {}", path.display())));
    }
    let params = models::load(path)?;
    if params.input_dim != data.n {
        return Err(CliError::Usage(format!(
            "{}: model expects {} features, data has {}",
            path.display(),
            params.input_dim,
            data.n
        )));
    }
    Ok(params)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))
}
