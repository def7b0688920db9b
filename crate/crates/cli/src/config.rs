use std::path::{Path, PathBuf};

use rul_uap::attacks::AttackConfig;
use rul_uap::data::SynthConfig;
use rul_uap::eval::DEFAULT_EPSILON_GRID;
use rul_uap::models::{Arch, TrainConfig};
use rul_uap::rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Exactly one data source: three C-MAPSS files or a synthetic fleet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Cmapss {
        train: PathBuf,
        test: PathBuf,
        rul: PathBuf,
    },
    Synthetic(SynthConfig),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic(SynthConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    pub arch: Arch,
    pub hidden_dim: usize,
    /// Head output multiplier; `None` uses the largest training label.
    pub output_scale: Option<f64>,
    pub train: TrainConfig,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            arch: Arch::Lstm,
            hidden_dim: 32,
            output_scale: None,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

// Unknown keys are rejected by the flattened `AttackConfig`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackBlock {
    #[serde(flatten)]
    pub cfg: AttackConfig,
    /// Windows the perturbation is computed on.
    pub on: Split,
    /// Seeded subsample of the attack windows, to bound runtime.
    pub max_windows: Option<usize>,
}

impl Default for AttackBlock {
    fn default() -> Self {
        Self {
            cfg: AttackConfig::default(),
            on: Split::Train,
            max_windows: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub epsilons: Vec<f64>,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            epsilons: DEFAULT_EPSILON_GRID.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportBlock {
    /// Engines plotted cycle by cycle; empty means the first test engine.
    pub engines: Vec<u32>,
    /// Engine whose last window is dumped as input traces.
    pub trace_engine: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Top-level seed; train, shuffle, subsample and synth seeds derive from it.
    pub seed: u64,
    pub data: DataSource,
    pub window: usize,
    pub rul_cap: Option<f64>,
    pub model: ModelBlock,
    pub attack: AttackBlock,
    pub sweep: SweepBlock,
    pub report: ReportBlock,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data: DataSource::default(),
            window: 80,
            rul_cap: None,
            model: ModelBlock::default(),
            attack: AttackBlock::default(),
            sweep: SweepBlock::default(),
            report: ReportBlock::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Flag values that override the config file when present.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub r_fool: Option<f64>,
    pub e_fool: Option<usize>,
    pub arch: Option<Arch>,
    pub epochs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        // Data paths are relative to the config file.
        if let (DataSource::Cmapss { train, test, rul }, Some(dir)) = (&mut cfg.data, path.parent()) {
            for p in [train, test, rul] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Applies flag overrides, then fans the top-level seed out to the
    /// per-purpose seeds.
    pub fn resolve(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(v) = &o.out {
            self.output_dir = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.epsilon {
            self.attack.cfg.epsilon = v;
        }
        if let Some(v) = o.alpha {
            self.attack.cfg.alpha = v;
        }
        if let Some(v) = o.r_fool {
            self.attack.cfg.r_fool = v;
        }
        if let Some(v) = o.e_fool {
            self.attack.cfg.e_fool = v;
        }
        if let Some(v) = o.arch {
            self.model.arch = v;
        }
        if let Some(v) = o.epochs {
            self.model.train.epochs = v;
        }
        self.model.train.seed = rng::sub_seed(self.seed, "shuffle");
        self.attack.cfg.seed = rng::sub_seed(self.seed, "attack");
        if let DataSource::Synthetic(s) = &mut self.data {
            s.seed = rng::sub_seed(self.seed, "synth");
        }
        self.validate()?;
        Ok(self)
    }

    pub fn init_seed(&self) -> u64 {
        rng::sub_seed(self.seed, "train")
    }

    pub fn subsample_seed(&self) -> u64 {
        rng::sub_seed(self.seed, "subsample")
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.window < 1 {
            return Err(CliError::Usage("window must be >= 1".into()));
        }
        if self.model.hidden_dim < 1 {
            return Err(CliError::Usage("model.hidden_dim must be >= 1".into()));
        }
        if let Some(s) = self.model.output_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(CliError::Usage(format!("model.output_scale must be > 0, got {s}")));
            }
        }
        if let Some(c) = self.rul_cap {
            if !(c > 0.0) {
                return Err(CliError::Usage(format!("rul_cap must be > 0, got {c}")));
            }
        }
        if self.attack.max_windows == Some(0) {
            return Err(CliError::Usage("attack.max_windows must be >= 1".into()));
        }
        self.model.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.attack.cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(())
    }

    /// Referenced input files must exist before any work starts.
    pub fn check_paths(&self) -> Result<(), CliError> {
        if let DataSource::Cmapss { train, test, rul } = &self.data {
            for p in [train, test, rul] {
                if !p.is_file() {
                    return Err(CliError::Usage(format!("data file not found: {}", p.display())));
                }
            }
        }
        Ok(())
    }
}
