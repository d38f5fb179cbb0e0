//! Run configuration in a flat `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; missing keys keep their defaults. Relative paths are resolved
//! against the directory of the config file when it is loaded from disk.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use dapg_core::envs::{Distractor, EnvId, ObservationMode, RewardMode};
use dapg_core::{DapgConfig, EncoderSpec, EnvSpec, FitConfig, GaeConfig, NpgConfig, TrainConfig};

use crate::error::{CliError, CliResult};

/// Whether the encoder output is followed by proprioception.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppendProprio {
    /// On for pixel observations, off for state observations.
    Auto,
    Always,
    Never,
}

impl AppendProprio {
    pub fn resolve(self, mode: ObservationMode) -> bool {
        match self {
            AppendProprio::Auto => matches!(mode, ObservationMode::Pixels(_)),
            AppendProprio::Always => true,
            AppendProprio::Never => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvSpec,
    pub encoder: EncoderSpec,
    pub append_proprio: AppendProprio,
    pub dapg: DapgConfig,
    pub npg: NpgConfig,
    pub gae: GaeConfig,
    pub vf: FitConfig,
    pub policy_hidden: Vec<usize>,
    pub vf_hidden: Vec<usize>,
    /// Directory written by `gen-demos`; `None` trains without demos.
    pub demo_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        RunConfig {
            env: EnvSpec::point_reacher(),
            encoder: EncoderSpec::Identity,
            append_proprio: AppendProprio::Auto,
            dapg: train.dapg,
            npg: train.npg,
            gae: train.gae,
            vf: train.vf_fit,
            policy_hidden: train.policy_hidden,
            vf_hidden: train.vf_hidden,
            demo_path: Some(PathBuf::from("demos")),
            output_dir: PathBuf::from("runs/default"),
            seed: train.seed,
            workers: train.workers,
        }
    }
}

fn field_err(line: usize, key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("line {line}: {key}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| field_err(line, key, format!("'{value}': {e}")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(field_err(line, key, format!("expected true or false, got '{value}'"))),
    }
}

fn parse_list(line: usize, key: &str, value: &str) -> CliResult<Vec<usize>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_num(line, key, v.trim())).collect()
}

pub fn parse_distractors(value: &str) -> Result<BTreeSet<Distractor>, String> {
    match value {
        "" | "none" => Ok(BTreeSet::new()),
        "all" => Ok(Distractor::ALL.into_iter().collect()),
        _ => value
            .split(',')
            .map(|v| v.trim().parse::<Distractor>().map_err(|e| e.to_string()))
            .collect(),
    }
}

fn join<T: ToString>(values: impl IntoIterator<Item = T>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dapg: self.dapg,
            npg: self.npg,
            gae: self.gae,
            vf_fit: self.vf,
            policy_hidden: self.policy_hidden.clone(),
            vf_hidden: self.vf_hidden.clone(),
            seed: self.seed,
            workers: self.workers,
        }
    }

    pub fn append_proprio(&self) -> bool {
        self.append_proprio.resolve(self.env.observation_mode)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = RunConfig::default();
        // encoder parameters may appear before or after the encoder kind
        let mut encoder_kind = None;
        let mut enc_seed = 0u64;
        let mut enc_dim = dapg_core::encoders::DEFAULT_FEATURE_DIM;
        let mut enc_factor = 4usize;
        let mut enc_path: Option<PathBuf> = None;
        let mut seen = BTreeSet::new();

        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(CliError::Config(format!("line {line}: expected key = value, got '{trimmed}'")));
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(field_err(line, key, "duplicate key"));
            }
            entries.push((line, key, value));
        }
        // env.id selects the environment defaults the other env keys override
        entries.sort_by_key(|(_, key, _)| *key != "env.id");

        for (line, key, value) in entries {
            match key {
                "env.id" => cfg.env = EnvSpec::default_for(value.parse::<EnvId>().map_err(|e| field_err(line, key, e))?),
                "env.observation" => cfg.env.observation_mode = value.parse().map_err(|e| field_err(line, key, e))?,
                "env.reward" => cfg.env.reward_mode = value.parse::<RewardMode>().map_err(|e| field_err(line, key, e))?,
                "env.horizon" => cfg.env.horizon = parse_num(line, key, value)?,
                "env.dt" => cfg.env.dt = parse_num(line, key, value)?,
                "env.action_bounds" => {
                    cfg.env.action_bounds = value
                        .split(',')
                        .map(|pair| {
                            let (lo, hi) = pair
                                .split_once(':')
                                .ok_or_else(|| field_err(line, key, format!("expected lo:hi, got '{pair}'")))?;
                            Ok((parse_num(line, key, lo.trim())?, parse_num(line, key, hi.trim())?))
                        })
                        .collect::<CliResult<_>>()?
                }
                "env.seed" => cfg.env.seed = parse_num(line, key, value)?,
                "env.distractors" => cfg.env.distractors.modes = parse_distractors(value).map_err(|e| field_err(line, key, e))?,
                "env.distractor.brightness" => cfg.env.distractors.ranges.brightness = parse_num(line, key, value)?,
                "env.distractor.gradient" => cfg.env.distractors.ranges.gradient = parse_num(line, key, value)?,
                "env.distractor.recolor_min" => cfg.env.distractors.ranges.recolor_min = parse_num(line, key, value)?,
                "env.distractor.clutter_radius" => {
                    let (lo, hi) = value
                        .split_once(',')
                        .ok_or_else(|| field_err(line, key, format!("expected lo,hi, got '{value}'")))?;
                    cfg.env.distractors.ranges.clutter_radius =
                        (parse_num(line, key, lo.trim())?, parse_num(line, key, hi.trim())?);
                }
                "encoder" => encoder_kind = Some((line, value.to_string())),
                "encoder.seed" => enc_seed = parse_num(line, key, value)?,
                "encoder.feature_dim" => enc_dim = parse_num(line, key, value)?,
                "encoder.factor" => enc_factor = parse_num(line, key, value)?,
                "encoder.path" => enc_path = Some(PathBuf::from(value)),
                "encoder.append_proprio" => {
                    cfg.append_proprio = match value {
                        "auto" => AppendProprio::Auto,
                        "true" => AppendProprio::Always,
                        "false" => AppendProprio::Never,
                        _ => return Err(field_err(line, key, format!("expected auto, true or false, got '{value}'"))),
                    }
                }
                "dapg.lam0" => cfg.dapg.lam0 = parse_num(line, key, value)?,
                "dapg.lam1" => cfg.dapg.lam1 = parse_num(line, key, value)?,
                "dapg.bc_batch_size" => cfg.dapg.bc_batch_size = parse_num(line, key, value)?,
                "dapg.bc_epochs" => cfg.dapg.bc_epochs = parse_num(line, key, value)?,
                "dapg.bc_learning_rate" => cfg.dapg.bc_learning_rate = parse_num(line, key, value)?,
                "dapg.trajectories_per_iteration" => cfg.dapg.trajectories_per_iteration = parse_num(line, key, value)?,
                "dapg.iterations" => cfg.dapg.iterations = parse_num(line, key, value)?,
                "dapg.clamp_negative_weight" => cfg.dapg.clamp_negative_weight = parse_bool(line, key, value)?,
                "npg.step_size_delta" => cfg.npg.step_size_delta = parse_num(line, key, value)?,
                "npg.cg_iterations" => cfg.npg.cg_iterations = parse_num(line, key, value)?,
                "npg.cg_residual_tol" => cfg.npg.cg_residual_tol = parse_num(line, key, value)?,
                "npg.fisher_damping" => cfg.npg.fisher_damping = parse_num(line, key, value)?,
                "gae.gamma" => cfg.gae.gamma = parse_num(line, key, value)?,
                "gae.lambda" => cfg.gae.lambda = parse_num(line, key, value)?,
                "gae.standardize" => cfg.gae.standardize = parse_bool(line, key, value)?,
                "vf.batch_size" => cfg.vf.batch_size = parse_num(line, key, value)?,
                "vf.epochs" => cfg.vf.epochs = parse_num(line, key, value)?,
                "vf.learning_rate" => cfg.vf.learning_rate = parse_num(line, key, value)?,
                "policy.hidden" => cfg.policy_hidden = parse_list(line, key, value)?,
                "vf.hidden" => cfg.vf_hidden = parse_list(line, key, value)?,
                "demo_path" => cfg.demo_path = (value != "none").then(|| PathBuf::from(value)),
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "seed" => cfg.seed = parse_num(line, key, value)?,
                "workers" => cfg.workers = parse_num(line, key, value)?,
                _ => return Err(field_err(line, key, "unknown key")),
            }
        }

        if let Some((line, kind)) = encoder_kind {
            cfg.encoder = match kind.as_str() {
                "identity" => EncoderSpec::Identity,
                "random_projection" => EncoderSpec::RandomProjection {
                    seed: enc_seed,
                    feature_dim: enc_dim,
                },
                "downsample" => EncoderSpec::Downsample { factor: enc_factor },
                "file" => EncoderSpec::FileFeature {
                    path: enc_path.ok_or_else(|| field_err(line, "encoder", "file encoder needs encoder.path"))?,
                },
                other => return Err(field_err(line, "encoder", format!("unknown encoder '{other}'"))),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let wrap = |key: &str, e: dapg_core::Error| CliError::Config(format!("{key}: {e}"));
        self.env.validate().map_err(|e| wrap("env", e))?;
        self.dapg.validate().map_err(|e| wrap("dapg", e))?;
        self.npg.validate().map_err(|e| wrap("npg", e))?;
        self.gae.validate().map_err(|e| wrap("gae", e))?;
        if self.vf.batch_size == 0 {
            return Err(CliError::Config("vf.batch_size: must be at least 1".into()));
        }
        if !(self.vf.learning_rate > 0.0) {
            return Err(CliError::Config("vf.learning_rate: must be positive".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers: must be at least 1".into()));
        }
        if let EncoderSpec::RandomProjection { feature_dim: 0, .. } = self.encoder {
            return Err(CliError::Config("encoder.feature_dim: must be at least 1".into()));
        }
        if matches!(self.encoder, EncoderSpec::Downsample { .. } | EncoderSpec::RandomProjection { .. })
            && self.env.observation_mode == ObservationMode::State
        {
            return Err(CliError::Config("encoder: pixel encoders need env.observation = pixels".into()));
        }
        Ok(())
    }

    /// Reads a config file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = RunConfig::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.demo_path.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.output_dir);
        if let EncoderSpec::FileFeature { path } = &mut cfg.encoder {
            resolve(path);
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let env = &self.env;
        kv("env.id", env.id.to_string());
        kv("env.observation", env.observation_mode.to_string());
        kv("env.reward", env.reward_mode.to_string());
        kv("env.horizon", env.horizon.to_string());
        kv("env.dt", env.dt.to_string());
        kv("env.action_bounds", join(env.action_bounds.iter().map(|(lo, hi)| format!("{lo}:{hi}"))));
        kv("env.seed", env.seed.to_string());
        let modes = &env.distractors.modes;
        kv("env.distractors", if modes.is_empty() { "none".into() } else { join(modes) });
        let r = &env.distractors.ranges;
        kv("env.distractor.brightness", r.brightness.to_string());
        kv("env.distractor.gradient", r.gradient.to_string());
        kv("env.distractor.recolor_min", r.recolor_min.to_string());
        kv("env.distractor.clutter_radius", format!("{},{}", r.clutter_radius.0, r.clutter_radius.1));
        match &self.encoder {
            EncoderSpec::Identity => kv("encoder", "identity".into()),
            EncoderSpec::RandomProjection { seed, feature_dim } => {
                kv("encoder", "random_projection".into());
                kv("encoder.seed", seed.to_string());
                kv("encoder.feature_dim", feature_dim.to_string());
            }
            EncoderSpec::Downsample { factor } => {
                kv("encoder", "downsample".into());
                kv("encoder.factor", factor.to_string());
            }
            EncoderSpec::FileFeature { path } => {
                kv("encoder", "file".into());
                kv("encoder.path", path.display().to_string());
            }
        }
        kv(
            "encoder.append_proprio",
            match self.append_proprio {
                AppendProprio::Auto => "auto",
                AppendProprio::Always => "true",
                AppendProprio::Never => "false",
            }
            .into(),
        );
        let d = &self.dapg;
        kv("dapg.lam0", d.lam0.to_string());
        kv("dapg.lam1", d.lam1.to_string());
        kv("dapg.bc_batch_size", d.bc_batch_size.to_string());
        kv("dapg.bc_epochs", d.bc_epochs.to_string());
        kv("dapg.bc_learning_rate", d.bc_learning_rate.to_string());
        kv("dapg.trajectories_per_iteration", d.trajectories_per_iteration.to_string());
        kv("dapg.iterations", d.iterations.to_string());
        kv("dapg.clamp_negative_weight", d.clamp_negative_weight.to_string());
        let n = &self.npg;
        kv("npg.step_size_delta", n.step_size_delta.to_string());
        kv("npg.cg_iterations", n.cg_iterations.to_string());
        kv("npg.cg_residual_tol", n.cg_residual_tol.to_string());
        kv("npg.fisher_damping", n.fisher_damping.to_string());
        kv("gae.gamma", self.gae.gamma.to_string());
        kv("gae.lambda", self.gae.lambda.to_string());
        kv("gae.standardize", self.gae.standardize.to_string());
        kv("vf.batch_size", self.vf.batch_size.to_string());
        kv("vf.epochs", self.vf.epochs.to_string());
        kv("vf.learning_rate", self.vf.learning_rate.to_string());
        kv("policy.hidden", join(&self.policy_hidden));
        kv("vf.hidden", join(&self.vf_hidden));
        kv(
            "demo_path",
            self.demo_path.as_ref().map_or("none".into(), |p| p.display().to_string()),
        );
        kv("output_dir", self.output_dir.display().to_string());
        kv("seed", self.seed.to_string());
        kv("workers", self.workers.to_string());
        s
    }

    /// SHA-256 of the serialized config, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
