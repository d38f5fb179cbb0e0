//! Built-in continuous-control tasks: a 2-D point-mass reacher and a
//! pendulum swing-up, observed either as state vectors or rendered pixels.

mod pendulum;
mod reacher;
pub mod render;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoders::{FrameKey, ObsData, RawObservation};
use crate::error::{Error, Result};

pub use pendulum::Pendulum;
pub use reacher::Reacher;
pub use render::{Distractor, DistractorDraw, DistractorRanges, Glyph, GlyphRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvId {
    PointReacher,
    Pendulum,
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvId::PointReacher => "point_reacher",
            EnvId::Pendulum => "pendulum",
        })
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point_reacher" | "reacher" => Ok(EnvId::PointReacher),
            "pendulum" => Ok(EnvId::Pendulum),
            other => Err(Error::invalid(format!("unknown environment '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationMode {
    State,
    /// Square grayscale frames of the given side length.
    Pixels(usize),
}

impl fmt::Display for ObservationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservationMode::State => f.write_str("state"),
            ObservationMode::Pixels(n) => write!(f, "pixels{n}"),
        }
    }
}

impl FromStr for ObservationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "state" {
            return Ok(ObservationMode::State);
        }
        if s == "pixels" {
            return Ok(ObservationMode::Pixels(render::DEFAULT_FRAME_SIZE));
        }
        match s.strip_prefix("pixels").map(str::parse::<usize>) {
            Some(Ok(n)) if n >= 4 => Ok(ObservationMode::Pixels(n)),
            _ => Err(Error::invalid(format!("unknown observation mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    Sparse,
    Dense,
}

impl fmt::Display for RewardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardMode::Sparse => "sparse",
            RewardMode::Dense => "dense",
        })
    }
}

impl FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(RewardMode::Sparse),
            "dense" => Ok(RewardMode::Dense),
            other => Err(Error::invalid(format!("unknown reward mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistractorConfig {
    pub modes: BTreeSet<Distractor>,
    pub ranges: DistractorRanges,
}

impl DistractorConfig {
    pub fn none() -> Self {
        DistractorConfig::default()
    }

    pub fn with_modes(modes: impl IntoIterator<Item = Distractor>) -> Self {
        DistractorConfig {
            modes: modes.into_iter().collect(),
            ranges: DistractorRanges::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub id: EnvId,
    pub observation_mode: ObservationMode,
    pub reward_mode: RewardMode,
    pub horizon: usize,
    pub dt: f64,
    pub action_bounds: Vec<(f64, f64)>,
    pub distractors: DistractorConfig,
    pub seed: u64,
}

impl EnvSpec {
    pub fn point_reacher() -> Self {
        EnvSpec {
            id: EnvId::PointReacher,
            observation_mode: ObservationMode::State,
            reward_mode: RewardMode::Dense,
            horizon: reacher::HORIZON,
            dt: reacher::DT,
            action_bounds: vec![(-1.0, 1.0); 2],
            distractors: DistractorConfig::none(),
            seed: 0,
        }
    }

    pub fn pendulum() -> Self {
        EnvSpec {
            id: EnvId::Pendulum,
            observation_mode: ObservationMode::State,
            reward_mode: RewardMode::Dense,
            horizon: pendulum::HORIZON,
            dt: pendulum::DT,
            action_bounds: vec![(-pendulum::MAX_TORQUE, pendulum::MAX_TORQUE)],
            distractors: DistractorConfig::none(),
            seed: 0,
        }
    }

    pub fn default_for(id: EnvId) -> Self {
        match id {
            EnvId::PointReacher => EnvSpec::point_reacher(),
            EnvId::Pendulum => EnvSpec::pendulum(),
        }
    }

    pub fn with_observation(mut self, mode: ObservationMode) -> Self {
        self.observation_mode = mode;
        self
    }

    pub fn with_reward(mut self, mode: RewardMode) -> Self {
        self.reward_mode = mode;
        self
    }

    pub fn with_distractors(mut self, distractors: DistractorConfig) -> Self {
        self.distractors = distractors;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt must be positive"));
        }
        let expected = match self.id {
            EnvId::PointReacher => 2,
            EnvId::Pendulum => 1,
        };
        if self.action_bounds.len() != expected {
            return Err(Error::invalid(format!(
                "{} expects {expected} action bounds, got {}",
                self.id,
                self.action_bounds.len()
            )));
        }
        if self.action_bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::invalid("action bounds must satisfy lo < hi"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub distance_to_goal: f64,
    /// The success predicate at the current state.
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub raw_observation: RawObservation,
    /// Joint positions and velocities; never includes the goal.
    pub proprio: Vec<f64>,
    pub reward: f64,
    /// True terminal state. The built-in tasks never terminate early.
    pub done: bool,
    /// The horizon was reached.
    pub truncated: bool,
    pub info: StepInfo,
}

/// Task physics behind the common episode wrapper.
pub(crate) trait Dynamics: Send + Sync + fmt::Debug {
    fn reset(&mut self, rng: &mut dyn RngCore);
    fn integrate(&mut self, action: &[f64], dt: f64);
    fn success(&self) -> bool;
    fn dense_reward(&self) -> f64;
    fn distance_to_goal(&self) -> f64;
    fn state(&self) -> Vec<f64>;
    fn proprio(&self) -> Vec<f64>;
    fn glyphs(&self) -> Vec<Glyph>;
    fn expert_action(&self) -> Vec<f64>;
    fn clone_box(&self) -> Box<dyn Dynamics>;
}

#[derive(Debug)]
pub struct Env {
    spec: EnvSpec,
    dynamics: Box<dyn Dynamics>,
    t: usize,
    started: bool,
    finished: bool,
    episode: u64,
    next_episode: u64,
    draw: DistractorDraw,
}

impl Clone for Env {
    fn clone(&self) -> Self {
        Env {
            spec: self.spec.clone(),
            dynamics: self.dynamics.clone_box(),
            t: self.t,
            started: self.started,
            finished: self.finished,
            episode: self.episode,
            next_episode: self.next_episode,
            draw: self.draw.clone(),
        }
    }
}

impl Env {
    pub fn new(spec: EnvSpec) -> Result<Self> {
        spec.validate()?;
        let dynamics: Box<dyn Dynamics> = match spec.id {
            EnvId::PointReacher => Box::new(Reacher::default()),
            EnvId::Pendulum => Box::new(Pendulum::default()),
        };
        Ok(Env {
            spec,
            dynamics,
            t: 0,
            started: false,
            finished: false,
            episode: 0,
            next_episode: 0,
            draw: DistractorDraw::default(),
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn action_dim(&self) -> usize {
        self.spec.action_bounds.len()
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state().len()
    }

    pub fn proprio_dim(&self) -> usize {
        self.dynamics.proprio().len()
    }

    /// Length of the raw observation vector.
    pub fn raw_len(&self) -> usize {
        match self.spec.observation_mode {
            ObservationMode::State => self.state_dim(),
            ObservationMode::Pixels(n) => n * n,
        }
    }

    pub fn step_index(&self) -> usize {
        self.t
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    /// Identifier given to the episode started by the next `reset`.
    pub fn set_next_episode(&mut self, id: u64) {
        self.next_episode = id;
    }

    /// Ground-truth state, for experts and tests.
    pub fn state(&self) -> Vec<f64> {
        self.dynamics.state()
    }

    pub fn distractor_draw(&self) -> &DistractorDraw {
        &self.draw
    }

    pub fn reset(&mut self, rng: &mut dyn RngCore) -> StepResult {
        self.dynamics.reset(rng);
        // always consume exactly one word so the task stream is independent
        // of which distractors are enabled
        let mut drng = ChaCha8Rng::seed_from_u64(rng.next_u64() ^ self.spec.seed);
        self.draw = DistractorDraw::sample(&self.spec.distractors.ranges, &mut drng);
        self.episode = self.next_episode;
        self.next_episode += 1;
        self.t = 0;
        self.started = true;
        self.finished = false;
        self.result(0.0)
    }

    pub fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if !self.started {
            return Err(Error::Protocol("step before reset".into()));
        }
        if self.finished {
            return Err(Error::Protocol("step after the episode ended".into()));
        }
        if action.len() != self.action_dim() {
            return Err(Error::invalid(format!(
                "action has {} entries, expected {}",
                action.len(),
                self.action_dim()
            )));
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("action is not finite"));
        }
        let clipped: Vec<f64> = action
            .iter()
            .zip(&self.spec.action_bounds)
            .map(|(a, (lo, hi))| a.clamp(*lo, *hi))
            .collect();
        self.dynamics.integrate(&clipped, self.spec.dt);
        self.t += 1;
        let reward = match self.spec.reward_mode {
            RewardMode::Sparse => {
                if self.dynamics.success() {
                    1.0
                } else {
                    0.0
                }
            }
            RewardMode::Dense => self.dynamics.dense_reward(),
        };
        let mut out = self.result(reward);
        if self.t >= self.spec.horizon {
            out.truncated = true;
            self.finished = true;
        }
        Ok(out)
    }

    /// Scripted privileged expert action for the current state.
    pub fn expert_action(&self) -> Vec<f64> {
        self.dynamics.expert_action()
    }

    /// The current frame with the configured distractors.
    pub fn render(&self) -> Result<Vec<f64>> {
        match self.spec.observation_mode {
            ObservationMode::Pixels(n) => Ok(self.render_with(n, &self.spec.distractors.modes)),
            ObservationMode::State => Err(Error::invalid("render requires a pixel observation mode")),
        }
    }

    /// The current frame at side `size` with an explicit set of distractors,
    /// using this episode's draws.
    pub fn render_with(&self, size: usize, modes: &BTreeSet<Distractor>) -> Vec<f64> {
        render::render(&self.dynamics.glyphs(), size, modes, &self.draw)
    }

    fn result(&self, reward: f64) -> StepResult {
        let frame = FrameKey {
            episode: self.episode,
            step: self.t as u64,
        };
        let data = match self.spec.observation_mode {
            ObservationMode::State => ObsData::State(self.dynamics.state()),
            ObservationMode::Pixels(n) => ObsData::Pixels {
                size: n,
                values: self.render_with(n, &self.spec.distractors.modes),
            },
        };
        StepResult {
            raw_observation: RawObservation { frame, data },
            proprio: self.dynamics.proprio(),
            reward,
            done: false,
            truncated: false,
            info: StepInfo {
                distance_to_goal: self.dynamics.distance_to_goal(),
                success: self.dynamics.success(),
            },
        }
    }
}

/// Raw frames from uniformly random actions, episode after episode, until
/// `count` frames have been gathered. Used to calibrate encoder statistics.
pub fn calibration_frames(spec: &EnvSpec, count: usize, seed: u64) -> Result<Vec<RawObservation>> {
    use rand::Rng;
    let mut env = Env::new(spec.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(count);
    while frames.len() < count {
        let mut res = env.reset(&mut rng);
        loop {
            frames.push(res.raw_observation);
            if frames.len() == count || res.truncated {
                break;
            }
            let action: Vec<f64> = spec.action_bounds.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)).collect();
            res = env.step(&action)?;
        }
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_and_modes_parse() {
        assert_eq!("point_reacher".parse::<EnvId>().unwrap(), EnvId::PointReacher);
        assert_eq!("pixels".parse::<ObservationMode>().unwrap(), ObservationMode::Pixels(32));
        assert_eq!("pixels48".parse::<ObservationMode>().unwrap(), ObservationMode::Pixels(48));
        assert!("pixelsx".parse::<ObservationMode>().is_err());
        for m in [ObservationMode::State, ObservationMode::Pixels(16)] {
            assert_eq!(m.to_string().parse::<ObservationMode>().unwrap(), m);
        }
    }

    #[test]
    fn protocol_errors() {
        let mut env = Env::new(EnvSpec::point_reacher()).unwrap();
        assert!(matches!(env.step(&[0.0, 0.0]), Err(Error::Protocol(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        env.reset(&mut rng);
        assert!(env.step(&[f64::NAN, 0.0]).is_err());
        assert!(env.step(&[0.0]).is_err());
        for t in 0..100 {
            let r = env.step(&[0.0, 0.0]).unwrap();
            assert_eq!(r.truncated, t == 99);
            assert!(!r.done);
        }
        assert!(matches!(env.step(&[0.0, 0.0]), Err(Error::Protocol(_))));
    }

    #[test]
    fn fixed_seed_resets_identically() {
        for spec in [EnvSpec::point_reacher(), EnvSpec::pendulum()] {
            let mut a = Env::new(spec.clone()).unwrap();
            let mut b = Env::new(spec).unwrap();
            let ra = a.reset(&mut ChaCha8Rng::seed_from_u64(9));
            let rb = b.reset(&mut ChaCha8Rng::seed_from_u64(9));
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn sparse_reward_is_success_indicator() {
        let spec = EnvSpec::point_reacher().with_reward(RewardMode::Sparse);
        let mut env = Env::new(spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let mut r = env.reset(&mut rng);
            while !r.truncated {
                r = env.step(&env.expert_action()).unwrap();
                assert_eq!(r.reward, if r.info.success { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn distractors_leave_ground_truth_untouched() {
        use rand::Rng;
        let base = EnvSpec::point_reacher().with_observation(ObservationMode::Pixels(32));
        let noisy = base.clone().with_distractors(DistractorConfig::with_modes(Distractor::ALL));
        let mut a = Env::new(base).unwrap();
        let mut b = Env::new(noisy).unwrap();
        let mut ra = ChaCha8Rng::seed_from_u64(5);
        let mut rb = ChaCha8Rng::seed_from_u64(5);
        let mut actions = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..3 {
            let x = a.reset(&mut ra);
            let y = b.reset(&mut rb);
            assert_eq!(x.proprio, y.proprio);
            assert_ne!(x.raw_observation, y.raw_observation);
            for _ in 0..100 {
                let act = [actions.random_range(-1.0..1.0), actions.random_range(-1.0..1.0)];
                let x = a.step(&act).unwrap();
                let y = b.step(&act).unwrap();
                assert_eq!(a.state(), b.state());
                assert_eq!((x.reward, x.done, x.truncated), (y.reward, y.done, y.truncated));
            }
        }
    }

    #[test]
    fn calibration_frames_span_episodes() {
        let spec = EnvSpec::point_reacher().with_observation(ObservationMode::Pixels(16));
        let frames = calibration_frames(&spec, 250, 3).unwrap();
        assert_eq!(frames.len(), 250);
        assert_eq!(frames[0].frame, FrameKey { episode: 0, step: 0 });
        assert_eq!(frames[101].frame, FrameKey { episode: 1, step: 0 });
        assert_eq!(calibration_frames(&spec, 250, 3).unwrap(), frames);
    }
}
