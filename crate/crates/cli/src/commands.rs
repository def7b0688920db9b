use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rul_uap::attacks::{uap_compute, Perturbation};
use rul_uap::data::{write_series, SynthConfig};
use rul_uap::eval::{
    epsilon_sweep, evaluate, input_traces, last_windows_csv, report_csv, sweep_csv, traces_csv,
    trajectory_csv, trajectory_report, transfer_matrix, AttackReport,
};
use rul_uap::models::{self, Arch, ModelParams};

use crate::config::{DataSource, RunConfig};
use crate::error::{write_file, CliError};
use crate::pipeline::{checkpoint_path, ensure_dir, load_model, perturbation_path, prepare};

fn load_perturbation(path: &Path) -> Result<Perturbation, CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("perturbation not found: {}", path.display())));
    }
    Ok(Perturbation::load(path)?)
}

fn save_config(cfg: &RunConfig, name: &str) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(cfg).expect("config serializes");
    write_file(&cfg.output_dir.join(name), &(text + "\n"))
}

fn summary(r: &AttackReport) -> String {
    format!(
        "{} under {}: fooling {:.2}%, MAPE {:.2}% over {} windows ({} with zero RUL excluded)",
        r.model, r.attack, r.fooling_percentage, r.mape, r.n_samples, r.n_excluded
    )
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    let data = prepare(cfg)?;
    let scale = cfg.model.output_scale.unwrap_or_else(|| {
        let top = data.train.windows.iter().map(|w| w.y).fold(0.0, f64::max);
        if top > 0.0 {
            top
        } else {
            1.0
        }
    });
    let init = ModelParams::init(cfg.model.arch, data.train.n, cfg.model.hidden_dim, cfg.init_seed())
        .with_output_scale(scale);
    let out = models::train(&init, &data.train, &cfg.model.train)?;

    ensure_dir(&cfg.output_dir)?;
    let tag = cfg.model.arch.label().to_lowercase();
    let ckpt = checkpoint_path(cfg, cfg.model.arch);
    models::save(&out.params, &ckpt)?;
    let mut hist = String::from("epoch,mse\n");
    for (e, l) in out.loss_history.iter().enumerate() {
        writeln!(hist, "{},{l:?}", e + 1).unwrap();
    }
    write_file(&cfg.output_dir.join(format!("loss_history_{tag}.csv")), &hist)?;
    save_config(cfg, &format!("train_{tag}.config.json"))?;
    eprintln!(
        "trained {} on {} windows: MSE {:.3} -> {:.3}, checkpoint {}",
        cfg.model.arch,
        data.train.len(),
        out.loss_history.first().copied().unwrap_or(f64::NAN),
        out.loss_history.last().copied().unwrap_or(f64::NAN),
        ckpt.display()
    );
    Ok(())
}

pub fn attack(cfg: &RunConfig, checkpoint: Option<PathBuf>, output: Option<PathBuf>) -> Result<(), CliError> {
    let data = prepare(cfg)?;
    let ckpt = checkpoint.unwrap_or_else(|| checkpoint_path(cfg, cfg.model.arch));
    let model = load_model(&ckpt, &data.test)?;
    let set = data.attack_set(cfg);
    let u = uap_compute(&model, &set, &cfg.attack.cfg)?;

    ensure_dir(&cfg.output_dir)?;
    let path = output.unwrap_or_else(|| perturbation_path(cfg, model.arch));
    u.save(&path)?;
    save_config(cfg, &format!("attack_{}.config.json", model.arch.label().to_lowercase()))?;
    eprintln!(
        "perturbation for {}: epsilon {}, achieved fooling ratio {:.4} on {} windows after {} epochs, saved {}",
        u.source_model,
        u.epsilon,
        u.achieved_fooling,
        set.len(),
        u.epochs_run,
        path.display()
    );
    Ok(())
}

pub fn eval(cfg: &RunConfig, checkpoint: Option<PathBuf>, perturbation: Option<PathBuf>) -> Result<(), CliError> {
    let data = prepare(cfg)?;
    let ckpt = checkpoint.unwrap_or_else(|| checkpoint_path(cfg, cfg.model.arch));
    let model = load_model(&ckpt, &data.test)?;
    let u = perturbation.as_deref().map(load_perturbation).transpose()?;
    let alpha = cfg.attack.cfg.alpha;
    let clamp = cfg.attack.cfg.clamp_inputs;
    let report = evaluate(&model, &data.test, u.as_ref(), alpha, clamp)?;

    let engines = if cfg.report.engines.is_empty() {
        data.test.windows.first().map(|w| vec![w.engine_id]).unwrap_or_default()
    } else {
        cfg.report.engines.clone()
    };
    let traj = trajectory_report(&model, &data.test, &engines, u.as_ref(), clamp)?;
    for id in &traj.skipped {
        eprintln!("engine {id} has no full window in the test split, left out of trajectory.csv");
    }

    ensure_dir(&cfg.output_dir)?;
    let dir = &cfg.output_dir;
    write_file(&dir.join("report.csv"), &report_csv(std::slice::from_ref(&report)))?;
    write_file(&dir.join("report.json"), &(report.summary_json() + "\n"))?;
    write_file(&dir.join("trajectory.csv"), &trajectory_csv(&traj.rows))?;
    write_file(&dir.join("last_windows.csv"), &last_windows_csv(&traj.last_windows))?;
    if let Some(u) = &u {
        let engine = cfg
            .report
            .trace_engine
            .or_else(|| engines.first().copied())
            .ok_or_else(|| CliError::Usage("no engine available for input traces".into()))?;
        let last = data.test.for_engine(engine).last_per_engine();
        let window = last
            .windows
            .first()
            .ok_or_else(|| CliError::Usage(format!("engine {engine} has no full test window")))?;
        write_file(&dir.join("traces.csv"), &traces_csv(&input_traces(&window.x, u, clamp)?))?;
    }
    eprintln!("{}", summary(&report));
    Ok(())
}

pub fn sweep(cfg: &RunConfig, checkpoint: Option<PathBuf>) -> Result<(), CliError> {
    let data = prepare(cfg)?;
    let ckpt = checkpoint.unwrap_or_else(|| checkpoint_path(cfg, cfg.model.arch));
    let model = load_model(&ckpt, &data.test)?;
    let set = data.attack_set(cfg);
    let res = epsilon_sweep(&model, &set, &data.test, &cfg.sweep.epsilons, &cfg.attack.cfg)?;

    ensure_dir(&cfg.output_dir)?;
    write_file(&cfg.output_dir.join("sweep.csv"), &sweep_csv(&res))?;
    for r in &res.rows {
        eprintln!(
            "{} at epsilon {:e}: fooling {:.2}%, MAPE {:.2}%",
            res.model, r.epsilon, r.fooling_percentage, r.mape
        );
    }
    Ok(())
}

pub struct TransferArgs {
    pub checkpoint_a: Option<PathBuf>,
    pub checkpoint_b: Option<PathBuf>,
    pub perturbation_a: Option<PathBuf>,
    pub perturbation_b: Option<PathBuf>,
}

pub fn transfer(cfg: &RunConfig, a: TransferArgs) -> Result<(), CliError> {
    let data = prepare(cfg)?;
    let ca = a.checkpoint_a.unwrap_or_else(|| checkpoint_path(cfg, Arch::Lstm));
    let cb = a.checkpoint_b.unwrap_or_else(|| checkpoint_path(cfg, Arch::Gru));
    let pa = a.perturbation_a.unwrap_or_else(|| perturbation_path(cfg, Arch::Lstm));
    let pb = a.perturbation_b.unwrap_or_else(|| perturbation_path(cfg, Arch::Gru));
    let model_a = load_model(&ca, &data.test)?;
    let model_b = load_model(&cb, &data.test)?;
    let u_a = load_perturbation(&pa)?;
    let u_b = load_perturbation(&pb)?;
    let rows = transfer_matrix(
        &model_a,
        &model_b,
        &u_a,
        &u_b,
        &data.test,
        cfg.attack.cfg.alpha,
        cfg.attack.cfg.clamp_inputs,
    )?;

    ensure_dir(&cfg.output_dir)?;
    write_file(&cfg.output_dir.join("transfer.csv"), &report_csv(&rows))?;
    let json = serde_json::to_string_pretty(&rows).expect("reports serialize");
    write_file(&cfg.output_dir.join("transfer.json"), &(json + "\n"))?;
    for r in &rows {
        eprintln!("{}", summary(r));
    }
    Ok(())
}

/// Writes a synthetic fleet in C-MAPSS text format plus a config that reads it.
pub fn synth(cfg: &RunConfig) -> Result<(), CliError> {
    let sc = match &cfg.data {
        DataSource::Synthetic(s) => s.clone(),
        DataSource::Cmapss { .. } => SynthConfig {
            seed: rul_uap::rng::sub_seed(cfg.seed, "synth"),
            ..SynthConfig::default()
        },
    };
    let fleet = rul_uap::data::synth_fleet(&sc);
    ensure_dir(&cfg.output_dir)?;
    let dir = &cfg.output_dir;
    write_file(&dir.join("train.txt"), &write_series(&fleet.train))?;
    write_file(&dir.join("test.txt"), &write_series(&fleet.test))?;
    let rul: String = fleet.test_rul.iter().map(|r| format!("{r}\n")).collect();
    write_file(&dir.join("RUL.txt"), &rul)?;
    eprintln!(
        "synthetic fleet: {} train and {} test engines written to {}",
        fleet.train.len(),
        fleet.test.len(),
        dir.display()
    );
    Ok(())
}
