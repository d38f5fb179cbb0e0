//! Episode sampling shared by training, evaluation and demo generation.
//!
//! Every episode draws from its own ChaCha stream derived from
//! `(seed, group, index)`, so results do not depend on how episodes are
//! split across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoders::ObservationPipeline;
use crate::envs::Env;
use crate::error::{Error, Result};
use crate::policy::GaussianPolicy;
use crate::trajectory::{DemoSet, Trajectory, Transition};

/// Stream group used by evaluation rollouts.
pub const EVAL_GROUP: u64 = 0xE7A1;
/// Stream group used by expert demo generation.
pub const DEMO_GROUP: u64 = 0xDE30;

pub fn episode_rng(seed: u64, group: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((group << 32) ^ index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub trajectory: Trajectory,
    /// The success predicate held at some step.
    pub success: bool,
    pub total_reward: f64,
}

/// Chooses the action for the current step.
pub enum Actor<'a> {
    Policy { policy: &'a GaussianPolicy, deterministic: bool },
    Expert,
}

/// Runs one full episode from `reset`. Expert actions are recorded with a
/// zero log-probability.
pub fn run_episode(env: &mut Env, pipeline: &ObservationPipeline, actor: &Actor<'_>, rng: &mut ChaCha8Rng) -> Result<Episode> {
    let mut res = env.reset(rng);
    let mut obs = pipeline.observe(&res)?;
    let mut transitions = Vec::with_capacity(env.spec().horizon);
    let mut success = false;
    loop {
        let (action, log_prob) = match actor {
            Actor::Policy { policy, deterministic } => policy.act(&obs, rng, *deterministic)?,
            Actor::Expert => (env.expert_action(), 0.0),
        };
        res = env.step(&action)?;
        success |= res.info.success;
        let next = pipeline.observe(&res)?;
        transitions.push(Transition {
            observation: std::mem::replace(&mut obs, next),
            action,
            reward: res.reward,
            log_prob,
            done: res.done,
        });
        if res.done || res.truncated {
            break;
        }
    }
    let trajectory = Trajectory::new(transitions, obs)?;
    let total_reward = trajectory.total_reward();
    Ok(Episode {
        trajectory,
        success,
        total_reward,
    })
}

/// `count` episodes with indices `0..count` in stream `group`, run on up to
/// `workers` threads. Episode `i` is given frame-key episode id
/// `group * count + i`.
pub fn collect(
    env: &Env,
    pipeline: &ObservationPipeline,
    actor: &Actor<'_>,
    seed: u64,
    group: u64,
    count: usize,
    workers: usize,
) -> Result<Vec<Episode>> {
    let run = |i: usize| -> Result<Episode> {
        let mut env = env.clone();
        env.set_next_episode(group.wrapping_mul(count as u64).wrapping_add(i as u64));
        let mut rng = episode_rng(seed, group, i as u64);
        run_episode(&mut env, pipeline, actor, &mut rng)
    };
    let workers = workers.clamp(1, count.max(1));
    if workers == 1 {
        return (0..count).map(run).collect();
    }
    let chunk = count.div_ceil(workers);
    let results: Vec<Vec<Result<Episode>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let run = &run;
                s.spawn(move || (w * chunk..((w + 1) * chunk).min(count)).map(run).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("rollout worker panicked")).collect()
    });
    results.into_iter().flatten().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub rollouts: usize,
    pub success_rate: f64,
    pub mean_return: f64,
}

/// Deterministic-policy evaluation over `rollouts` episodes.
pub fn evaluate(
    env: &Env,
    pipeline: &ObservationPipeline,
    policy: &GaussianPolicy,
    rollouts: usize,
    seed: u64,
    workers: usize,
) -> Result<EvalReport> {
    if rollouts == 0 {
        return Err(Error::invalid("evaluation needs at least one rollout"));
    }
    let actor = Actor::Policy {
        policy,
        deterministic: true,
    };
    let episodes = collect(env, pipeline, &actor, seed, EVAL_GROUP, rollouts, workers)?;
    Ok(summarize(&episodes))
}

pub fn summarize(episodes: &[Episode]) -> EvalReport {
    let n = episodes.len().max(1) as f64;
    EvalReport {
        rollouts: episodes.len(),
        success_rate: episodes.iter().filter(|e| e.success).count() as f64 / n,
        mean_return: episodes.iter().map(|e| e.total_reward).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub demos: DemoSet,
    pub attempts: usize,
    pub failures: usize,
}

/// Collects `count` successful expert episodes, resampling failures. Gives
/// up with an error once more than `10 * count` attempts were made or more
/// than half of at least `10 * count` attempts failed.
pub fn generate_demos(env: &Env, pipeline: &ObservationPipeline, count: usize, seed: u64) -> Result<DemoReport> {
    let budget = 10 * count;
    let mut kept = Vec::with_capacity(count);
    let mut attempts = 0;
    let mut failures = 0;
    while kept.len() < count {
        if attempts >= budget {
            return Err(Error::Protocol(format!(
                "expert failed {failures} of {attempts} episodes; only {} of {count} demos collected",
                kept.len()
            )));
        }
        let mut e = env.clone();
        e.set_next_episode(attempts as u64);
        let mut rng = episode_rng(seed, DEMO_GROUP, attempts as u64);
        let episode = run_episode(&mut e, pipeline, &Actor::Expert, &mut rng)?;
        attempts += 1;
        if episode.success {
            kept.push(episode.trajectory);
        } else {
            failures += 1;
            if attempts >= 10 && failures * 2 > attempts {
                return Err(Error::Protocol(format!(
                    "expert failure rate {failures}/{attempts} exceeds 50%"
                )));
            }
        }
    }
    Ok(DemoReport {
        demos: DemoSet::new(kept, format!("scripted_expert:{}", env.spec().id))?,
        attempts,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvSpec;

    #[test]
    fn workers_do_not_change_results() {
        let env = Env::new(EnvSpec::point_reacher()).unwrap();
        let pipe = ObservationPipeline::state(6);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let policy = GaussianPolicy::init(6, &[8], 2, &mut rng).unwrap();
        let actor = Actor::Policy {
            policy: &policy,
            deterministic: false,
        };
        let a = collect(&env, &pipe, &actor, 3, 1, 5, 1).unwrap();
        let b = collect(&env, &pipe, &actor, 3, 1, 5, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        assert_eq!(a[0].trajectory.len(), 100);
        assert!(!a[0].trajectory.terminated());
    }

    #[test]
    fn expert_demos_are_successful_and_reproducible() {
        let env = Env::new(EnvSpec::point_reacher()).unwrap();
        let pipe = ObservationPipeline::state(6);
        let a = generate_demos(&env, &pipe, 5, 7).unwrap();
        assert_eq!(a.demos.trajectories.len(), 5);
        assert_eq!(a.demos.num_pairs(), 500);
        assert_eq!(generate_demos(&env, &pipe, 5, 7).unwrap(), a);
        let none = generate_demos(&env, &pipe, 0, 7).unwrap();
        assert!(none.demos.is_empty());
    }

    #[test]
    fn evaluation_counts_rollouts() {
        let env = Env::new(EnvSpec::point_reacher()).unwrap();
        let pipe = ObservationPipeline::state(6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let policy = GaussianPolicy::init(6, &[8], 2, &mut rng).unwrap();
        let r = evaluate(&env, &pipe, &policy, 1, 0, 1).unwrap();
        assert_eq!(r.rollouts, 1);
        assert!(evaluate(&env, &pipe, &policy, 0, 0, 1).is_err());
    }
}
