//! The `train`, `eval` and `gen-demos` subcommands as library functions.

use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use log::{info, warn};

use dapg_core::envs::{Distractor, DistractorConfig};
use dapg_core::rollout::{evaluate, generate_demos};
use dapg_core::{DemoSet, Env, GaussianPolicy, ObservationPipeline, Trainer};

use crate::config::RunConfig;
use crate::error::{classify, CliError, CliResult};
use crate::report::{learning_curve_svg, MetricsLog, ModeReport};

pub const DEFAULT_EVAL_ROLLOUTS: usize = 75;
pub const DEFAULT_DEMO_COUNT: usize = 25;

pub const POLICY_FILE: &str = "policy.ckpt";
pub const BC_POLICY_FILE: &str = "policy_bc.ckpt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const PLOT_FILE: &str = "learning_curve.svg";

pub fn build_pipeline(cfg: &RunConfig) -> CliResult<ObservationPipeline> {
    let encoder = cfg.encoder.build(&cfg.env).map_err(classify)?;
    Ok(ObservationPipeline::new(encoder, cfg.append_proprio()))
}

fn load_demos(cfg: &RunConfig) -> CliResult<DemoSet> {
    let Some(path) = &cfg.demo_path else {
        return Ok(DemoSet::empty());
    };
    if !path.is_dir() {
        return Err(CliError::Config(format!("demo path {} does not exist", path.display())));
    }
    DemoSet::read_dir(path).map_err(|e| CliError::Config(format!("demo path {}: {e}", path.display())))
}

fn check_dims(what: &str, got: (usize, usize), want: (usize, usize)) -> CliResult<()> {
    if got != want {
        return Err(CliError::Config(format!(
            "{what} has observation/action dims {got:?} but the env and encoder give {want:?}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub output_dir: PathBuf,
    pub iterations: usize,
    pub final_success_rate: Option<f64>,
}

/// Runs a full training job and writes its artifacts to `cfg.output_dir`.
pub fn train(cfg: &RunConfig) -> CliResult<TrainSummary> {
    let demos = load_demos(cfg)?;
    let env = Env::new(cfg.env.clone()).map_err(classify)?;
    let pipeline = build_pipeline(cfg)?;
    let dims = (pipeline.input_dim(env.proprio_dim()), env.action_dim());
    if let (Some(o), Some(a)) = (demos.obs_dim(), demos.act_dim()) {
        check_dims("demo set", (o, a), dims)?;
    }

    let out = &cfg.output_dir;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    info!(
        "training {} with {} demos, {} iterations, output in {}",
        cfg.env.id,
        demos.trajectories.len(),
        cfg.dapg.iterations,
        out.display()
    );

    let trainer = Trainer::new(env, &pipeline, &demos, cfg.train_config()).map_err(classify)?;
    trainer
        .state()
        .policy
        .write_checkpoint(&out.join(BC_POLICY_FILE))
        .map_err(classify)?;

    let mut log = MetricsLog::create(out)?;
    let mut log_error = None;
    let outcome = trainer.run(|state| {
        let m = state.metrics.last().expect("a completed iteration has metrics");
        info!("k={} return={:.3} success={:.2}", m.k, m.mean_return, m.success_rate);
        match log.append(m) {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                log_error = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    let state = &outcome.state;

    state.policy.write_checkpoint(&out.join(POLICY_FILE)).map_err(classify)?;
    let points: Vec<(f64, f64)> = state.metrics.iter().map(|m| (m.k as f64, m.success_rate)).collect();
    fs::write(
        out.join(PLOT_FILE),
        learning_curve_svg(&points, &format!("{} ({})", cfg.env.id, cfg.env.observation_mode)),
    )?;

    if let Some(e) = log_error {
        return Err(e);
    }
    if let Some(e) = outcome.error {
        return Err(CliError::Fault(format!("training stopped at iteration {}: {e}", state.k)));
    }
    Ok(TrainSummary {
        output_dir: out.clone(),
        iterations: state.k,
        final_success_rate: state.metrics.last().map(|m| m.success_rate),
    })
}

/// Distractor modes to evaluate. `none` is always evaluated first.
pub fn parse_eval_modes(list: &str) -> CliResult<Vec<Option<Distractor>>> {
    let modes = crate::config::parse_distractors(list).map_err(|e| CliError::Config(format!("--distractors: {e}")))?;
    Ok(std::iter::once(None).chain(modes.into_iter().map(Some)).collect())
}

/// Evaluates a frozen policy for `rollouts` deterministic episodes under each
/// distractor mode. Every mode replays the same episode seeds.
pub fn eval(
    cfg: &RunConfig,
    checkpoint: &Path,
    modes: &[Option<Distractor>],
    rollouts: usize,
    seed: u64,
) -> CliResult<Vec<ModeReport>> {
    if rollouts == 0 {
        return Err(CliError::Config("--rollouts: must be at least 1".into()));
    }
    if !checkpoint.is_file() {
        return Err(CliError::Config(format!("checkpoint {} does not exist", checkpoint.display())));
    }
    let policy = GaussianPolicy::read_checkpoint(checkpoint)
        .map_err(|e| CliError::Config(format!("checkpoint {}: {e}", checkpoint.display())))?;
    let pipeline = build_pipeline(cfg)?;

    let mut rows = Vec::with_capacity(modes.len());
    for mode in modes {
        let spec = cfg
            .env
            .clone()
            .with_distractors(DistractorConfig {
                modes: mode.iter().copied().collect(),
                ranges: cfg.env.distractors.ranges,
            });
        let env = Env::new(spec).map_err(classify)?;
        check_dims(
            "checkpoint",
            (policy.obs_dim(), policy.action_dim()),
            (pipeline.input_dim(env.proprio_dim()), env.action_dim()),
        )?;
        let r = evaluate(&env, &pipeline, &policy, rollouts, seed, cfg.workers).map_err(|e| CliError::Fault(e.to_string()))?;
        rows.push(ModeReport {
            mode: mode.map_or("none".to_string(), |d| d.name().to_string()),
            rollouts: r.rollouts,
            success_rate: r.success_rate,
            mean_return: r.mean_return,
        });
    }
    Ok(rows)
}

pub fn format_eval_table(rows: &[ModeReport]) -> String {
    let clean = rows.iter().find(|r| r.mode == "none").map(|r| r.success_rate);
    let mut s = format!("{:<18} {:>8} {:>8} {:>12} {:>8}\n", "mode", "rollouts", "success", "mean_return", "drop");
    for r in rows {
        let drop = clean.map_or(String::new(), |c| format!("{:.3}", c - r.success_rate));
        s.push_str(&format!(
            "{:<18} {:>8} {:>8.3} {:>12.3} {:>8}\n",
            r.mode, r.rollouts, r.success_rate, r.mean_return, drop
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoSummary {
    pub count: usize,
    pub attempts: usize,
    pub failures: usize,
}

/// Generates `count` successful expert demos, observations assembled
/// through the configured encoder, into `out`.
pub fn gen_demos(cfg: &RunConfig, count: usize, out: &Path, seed: u64) -> CliResult<DemoSummary> {
    let env = Env::new(cfg.env.clone()).map_err(classify)?;
    let pipeline = build_pipeline(cfg)?;
    let report = generate_demos(&env, &pipeline, count, seed).map_err(|e| CliError::Fault(e.to_string()))?;
    if report.failures > 0 {
        warn!("expert failed {} of {} episodes; failures were resampled", report.failures, report.attempts);
    }
    report.demos.write_dir(out).map_err(|e| CliError::Fault(e.to_string()))?;
    Ok(DemoSummary {
        count: report.demos.trajectories.len(),
        attempts: report.attempts,
        failures: report.failures,
    })
}
