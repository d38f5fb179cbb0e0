//! Generalized advantage estimation.

use crate::baseline::ValueFunction;
use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

const MIN_STD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaeConfig {
    pub gamma: f64,
    pub lambda: f64,
    /// Standardise advantages across the whole batch before they are used.
    pub standardize: bool,
}

impl Default for GaeConfig {
    fn default() -> Self {
        GaeConfig {
            gamma: 0.995,
            lambda: 0.97,
            standardize: true,
        }
    }
}

impl GaeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        Ok(())
    }
}

/// Advantages from per-step values and the value of the state after the
/// last step (`0` for a terminated episode).
///
/// `A_t = sum_l (gamma lambda)^l delta_{t+l}`, computed by the backward
/// recursion `A_t = delta_t + gamma lambda A_{t+1}`.
pub fn gae_from_values(
    rewards: &[f64],
    values: &[f64],
    bootstrap_value: f64,
    cfg: &GaeConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if rewards.is_empty() {
        return Err(Error::invalid("advantages of an empty trajectory"));
    }
    if values.len() != rewards.len() {
        return Err(Error::invalid(format!(
            "{} values for {} rewards",
            values.len(),
            rewards.len()
        )));
    }
    let discount = cfg.gamma * cfg.lambda;
    let mut out = vec![0.0; rewards.len()];
    let mut next_value = bootstrap_value;
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        let delta = rewards[t] + cfg.gamma * next_value - values[t];
        acc = delta + discount * acc;
        out[t] = acc;
        next_value = values[t];
    }
    Ok(out)
}

pub fn gae(trajectory: &Trajectory, vf: &ValueFunction, cfg: &GaeConfig) -> Result<Vec<f64>> {
    let values = vf.predict_many(trajectory.transitions().iter().map(|t| t.observation.as_slice()))?;
    let bootstrap = if trajectory.terminated() {
        0.0
    } else {
        vf.predict(trajectory.terminal_observation())?
    };
    gae_from_values(&trajectory.rewards(), &values, bootstrap, cfg)
}

/// Per-trajectory advantages concatenated in trajectory order, standardised
/// over the whole batch when `cfg.standardize` is set.
pub fn batch_advantages(trajectories: &[Trajectory], vf: &ValueFunction, cfg: &GaeConfig) -> Result<Vec<f64>> {
    let mut all = Vec::new();
    for traj in trajectories {
        all.extend(gae(traj, vf, cfg)?);
    }
    if cfg.standardize {
        all = standardize(&all)?;
    }
    Ok(all)
}

/// Zero mean, unit population standard deviation; all zeros when the input
/// is (numerically) constant.
pub fn standardize(advantages: &[f64]) -> Result<Vec<f64>> {
    if advantages.len() < 2 {
        return Err(Error::invalid("standardize needs at least two values"));
    }
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let std = (advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std < MIN_STD {
        return Ok(vec![0.0; advantages.len()]);
    }
    Ok(advantages.iter().map(|a| (a - mean) / std).collect())
}
