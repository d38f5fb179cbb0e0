//! On-policy trajectory storage and the demonstration directory format.
//!
//! A trajectory directory holds one CSV per trajectory with columns
//! `t, obs_0..obs_{n-1}, act_0..act_{m-1}, reward, log_prob, done` and a
//! `manifest.txt` that records the dimensions, a source tag, and one line per
//! trajectory naming its CSV file followed by its terminal observation.

use std::fs;
use std::path::Path;

use crate::error::{ensure_finite, Error, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Assembled policy input at time t.
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    /// log pi(a|s) under the parameters that generated the action.
    pub log_prob: f64,
    /// Task termination (not horizon truncation).
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    transitions: Vec<Transition>,
    terminal_observation: Vec<f64>,
}

impl Trajectory {
    pub fn new(transitions: Vec<Transition>, terminal_observation: Vec<f64>) -> Result<Self> {
        let first = transitions
            .first()
            .ok_or_else(|| Error::invalid("trajectory must contain at least one transition"))?;
        let (obs_dim, act_dim) = (first.observation.len(), first.action.len());
        for (t, tr) in transitions.iter().enumerate() {
            if tr.observation.len() != obs_dim || tr.action.len() != act_dim {
                return Err(Error::invalid(format!(
                    "transition {t} has dims ({}, {}), expected ({obs_dim}, {act_dim})",
                    tr.observation.len(),
                    tr.action.len()
                )));
            }
            if !tr.log_prob.is_finite() {
                return Err(Error::invalid(format!("transition {t} has non-finite log_prob")));
            }
            if tr.done && t + 1 != transitions.len() {
                return Err(Error::invalid(format!(
                    "transition {t} is marked done but is not the last one"
                )));
            }
        }
        if terminal_observation.len() != obs_dim {
            return Err(Error::invalid(format!(
                "terminal observation has length {}, expected {obs_dim}",
                terminal_observation.len()
            )));
        }
        Ok(Trajectory {
            transitions,
            terminal_observation,
        })
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn terminal_observation(&self) -> &[f64] {
        &self.terminal_observation
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.transitions[0].observation.len()
    }

    pub fn act_dim(&self) -> usize {
        self.transitions[0].action.len()
    }

    /// True when the episode ended by task termination rather than truncation.
    pub fn terminated(&self) -> bool {
        self.transitions.last().is_some_and(|t| t.done)
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.reward).collect()
    }

    pub fn total_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }

    pub fn discounted_return(&self, gamma: f64) -> Result<Vec<f64>> {
        discounted_return(&self.rewards(), gamma)
    }
}

/// Reward-to-go `out[t] = sum_{t' >= t} gamma^(t'-t) r_t'`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::invalid("discounted return of an empty trajectory"));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma {gamma} outside [0, 1)")));
    }
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (o, r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *o = acc;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet {
    pub trajectories: Vec<Trajectory>,
    pub source_tag: String,
}

impl DemoSet {
    pub fn new(trajectories: Vec<Trajectory>, source_tag: impl Into<String>) -> Result<Self> {
        if let Some(first) = trajectories.first() {
            let dims = (first.obs_dim(), first.act_dim());
            if let Some(i) = trajectories
                .iter()
                .position(|t| (t.obs_dim(), t.act_dim()) != dims)
            {
                return Err(Error::invalid(format!(
                    "demo trajectory {i} dimensions differ from trajectory 0"
                )));
            }
        }
        Ok(DemoSet {
            trajectories,
            source_tag: source_tag.into(),
        })
    }

    pub fn empty() -> Self {
        DemoSet {
            trajectories: Vec::new(),
            source_tag: String::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn num_pairs(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn obs_dim(&self) -> Option<usize> {
        self.trajectories.first().map(Trajectory::obs_dim)
    }

    pub fn act_dim(&self) -> Option<usize> {
        self.trajectories.first().map(Trajectory::act_dim)
    }

    /// All (observation, action) pairs in trajectory order.
    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.trajectories
            .iter()
            .flat_map(|t| t.transitions())
            .map(|tr| (tr.observation.as_slice(), tr.action.as_slice()))
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        write_trajectory_dir(dir, &self.trajectories, &self.source_tag)
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let (trajectories, tag) = read_trajectory_dir(dir)?;
        DemoSet::new(trajectories, tag)
    }
}

pub fn write_trajectory_dir(dir: &Path, trajectories: &[Trajectory], source_tag: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (obs_dim, act_dim) = trajectories
        .first()
        .map(|t| (t.obs_dim(), t.act_dim()))
        .unwrap_or((0, 0));

    let mut manifest = format!(
        "obs_dim={obs_dim}\nact_dim={act_dim}\nsource={source_tag}\ncount={}\n",
        trajectories.len()
    );
    for (i, traj) in trajectories.iter().enumerate() {
        let name = format!("traj_{i:04}.csv");
        write_trajectory_csv(&dir.join(&name), traj)?;
        manifest.push_str(&name);
        for v in traj.terminal_observation() {
            manifest.push(',');
            manifest.push_str(&v.to_string());
        }
        manifest.push('\n');
    }
    fs::write(dir.join(MANIFEST_FILE), manifest)?;
    Ok(())
}

fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["t".to_string()];
    header.extend((0..traj.obs_dim()).map(|i| format!("obs_{i}")));
    header.extend((0..traj.act_dim()).map(|i| format!("act_{i}")));
    header.extend(["reward", "log_prob", "done"].map(String::from));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;

    for (t, tr) in traj.transitions().iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(tr.observation.iter().map(f64::to_string));
        row.extend(tr.action.iter().map(f64::to_string));
        row.push(tr.reward.to_string());
        row.push(tr.log_prob.to_string());
        row.push(u8::from(tr.done).to_string());
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_dir(dir: &Path) -> Result<(Vec<Trajectory>, String)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path)?;
    let mut obs_dim = None;
    let mut act_dim = None;
    let mut count = None;
    let mut source = String::new();
    let mut trajectories = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::format(&manifest_path, lineno, format!("bad {key}: {v}")))
            };
            match key.trim() {
                "obs_dim" => obs_dim = Some(parse(value)?),
                "act_dim" => act_dim = Some(parse(value)?),
                "count" => count = Some(parse(value)?),
                "source" => source = value.trim().to_string(),
                other => {
                    return Err(Error::format(
                        &manifest_path,
                        lineno,
                        format!("unknown manifest key {other}"),
                    ))
                }
            }
            continue;
        }
        let (Some(n), Some(m)) = (obs_dim, act_dim) else {
            return Err(Error::format(
                &manifest_path,
                lineno,
                "trajectory listed before obs_dim/act_dim",
            ));
        };
        let mut fields = line.split(',');
        let file = fields.next().unwrap_or_default().trim();
        let terminal = fields
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::format(&manifest_path, lineno, format!("bad terminal value {f}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if terminal.len() != n {
            return Err(Error::format(
                &manifest_path,
                lineno,
                format!("terminal observation has {} values, expected {n}", terminal.len()),
            ));
        }
        let transitions = read_trajectory_csv(&dir.join(file), n, m)?;
        let traj = Trajectory::new(transitions, terminal)
            .map_err(|e| Error::format(&manifest_path, lineno, e.to_string()))?;
        trajectories.push(traj);
    }

    if let Some(c) = count {
        if c != trajectories.len() {
            return Err(Error::format(
                &manifest_path,
                0,
                format!("manifest count {c} but {} trajectories listed", trajectories.len()),
            ));
        }
    }
    Ok((trajectories, source))
}

fn read_trajectory_csv(path: &Path, obs_dim: usize, act_dim: usize) -> Result<Vec<Transition>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let width = 1 + obs_dim + act_dim + 3;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header occupies line 1
        let lineno = i + 2;
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != width {
            return Err(Error::format(
                path,
                lineno,
                format!("expected {width} columns, found {}", record.len()),
            ));
        }
        let values = record
            .iter()
            .skip(1)
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::format(path, lineno, format!("bad number {f}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let observation = values[..obs_dim].to_vec();
        let action = values[obs_dim..obs_dim + act_dim].to_vec();
        let tail = &values[obs_dim + act_dim..];
        ensure_finite(&observation, "observation")
            .and(ensure_finite(&action, "action"))
            .map_err(|e| Error::format(path, lineno, e.to_string()))?;
        out.push(Transition {
            observation,
            action,
            reward: tail[0],
            log_prob: tail[1],
            done: tail[2] != 0.0,
        });
    }
    Ok(out)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::format(path, line, e.to_string())
}
