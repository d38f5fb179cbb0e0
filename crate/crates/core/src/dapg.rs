//! Demo-augmented policy gradient: behaviour-cloning warm start, the decaying
//! demo weight, the augmented gradient and the full training loop.

use std::ops::ControlFlow;
use std::time::Instant;

use log::{debug, warn};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::advantage::{batch_advantages, GaeConfig};
use crate::baseline::{FitConfig, ValueFunction};
use crate::encoders::ObservationPipeline;
use crate::envs::Env;
use crate::error::{ensure_len, Error, Result};
use crate::flat::FlatVector;
use crate::npg::{npg_step, policy_gradient, NpgConfig, StepStatus};
use crate::policy::{GaussianPolicy, Samples};
use crate::rollout::{collect, summarize, Actor};
use crate::trajectory::DemoSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DapgConfig {
    pub lam0: f64,
    pub lam1: f64,
    pub bc_batch_size: usize,
    pub bc_epochs: usize,
    pub bc_learning_rate: f64,
    pub trajectories_per_iteration: usize,
    pub iterations: usize,
    /// Clamp a negative demo weight (negative max advantage) to zero.
    pub clamp_negative_weight: bool,
}

impl Default for DapgConfig {
    fn default() -> Self {
        DapgConfig {
            lam0: 0.01,
            lam1: 0.95,
            bc_batch_size: 32,
            bc_epochs: 5,
            bc_learning_rate: 0.001,
            trajectories_per_iteration: 20,
            iterations: 100,
            clamp_negative_weight: true,
        }
    }
}

impl DapgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lam0 >= 0.0) {
            return Err(Error::invalid("lam0 must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.lam1) {
            return Err(Error::invalid("lam1 must lie in [0, 1]"));
        }
        if self.bc_batch_size == 0 {
            return Err(Error::invalid("bc_batch_size must be at least 1"));
        }
        if !(self.bc_learning_rate > 0.0) {
            return Err(Error::invalid("bc_learning_rate must be positive"));
        }
        if self.trajectories_per_iteration == 0 {
            return Err(Error::invalid("trajectories_per_iteration must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcReport {
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// `(1/|B|) * 1/2 * sum ||mu(s) - a||^2` over every demo pair.
pub fn bc_loss(policy: &GaussianPolicy, demos: &Samples) -> Result<f64> {
    if demos.is_empty() {
        return Err(Error::invalid("behaviour-cloning loss of an empty demo set"));
    }
    let trace = policy.spec().forward_batch(policy.mean_params(), demos.observations.view())?;
    let diff = &trace.outputs() - &demos.actions;
    Ok(0.5 * diff.mapv(|d| d * d).sum() / demos.len() as f64)
}

/// Adam moments over a flat parameter vector.
struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(dim: usize, lr: f64) -> Self {
        Adam {
            lr,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Regresses the policy mean onto the demo actions with Adam over shuffled
/// minibatches. `log_std` is left untouched.
pub fn bc_pretrain<R: Rng + ?Sized>(
    policy: &mut GaussianPolicy,
    demos: &DemoSet,
    cfg: &DapgConfig,
    rng: &mut R,
) -> Result<BcReport> {
    cfg.validate()?;
    if demos.is_empty() {
        return Err(Error::invalid("behaviour cloning needs demonstrations"));
    }
    ensure_len(demos.obs_dim().unwrap_or(0), policy.obs_dim(), "demo observation")?;
    ensure_len(demos.act_dim().unwrap_or(0), policy.action_dim(), "demo action")?;
    let data = Samples::from_pairs(demos.pairs(), policy.obs_dim(), policy.action_dim())?;
    let initial_loss = bc_loss(policy, &data)?;
    let spec = policy.spec().clone();
    let mut adam = Adam::new(spec.param_count(), cfg.bc_learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..cfg.bc_epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.bc_batch_size) {
            let xb = data.observations.select(ndarray::Axis(0), chunk);
            let ab = data.actions.select(ndarray::Axis(0), chunk);
            let trace = spec.forward_batch(policy.mean_params(), xb.view())?;
            let cot: Array2<f64> = (&trace.outputs() - &ab) / chunk.len() as f64;
            let grad = spec.vjp_batch(policy.mean_params(), &trace, cot.view())?;
            adam.step(&mut policy.mean_params_mut().flat, &grad);
        }
    }
    let final_loss = bc_loss(policy, &data)?;
    Ok(BcReport {
        initial_loss,
        final_loss,
    })
}

/// `lam0 * lam1^k * max(advantages)`, unclamped.
pub fn demo_weight(advantages: &[f64], cfg: &DapgConfig, k: usize) -> Result<f64> {
    if advantages.is_empty() {
        return Err(Error::invalid("demo weight needs at least one advantage"));
    }
    let max = advantages.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(cfg.lam0 * cfg.lam1.powf(k as f64) * max)
}

/// Policy gradient over the on-policy batch plus `w` times the mean demo
/// score. Returns the plain policy gradient when `w == 0` or there are no
/// demo pairs.
pub fn augmented_gradient(
    policy: &GaussianPolicy,
    samples: &Samples,
    advantages: &[f64],
    demos: &Samples,
    w: f64,
) -> Result<FlatVector> {
    let mut g = policy_gradient(policy, samples, advantages)?;
    if w == 0.0 || demos.is_empty() {
        return Ok(g);
    }
    let weights = vec![w / demos.len() as f64; demos.len()];
    let demo_term = demos.scores(policy)?.weighted_sum(&weights)?;
    g.add_scaled(1.0, &demo_term)?;
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dapg: DapgConfig,
    pub npg: NpgConfig,
    pub gae: GaeConfig,
    pub vf_fit: FitConfig,
    pub policy_hidden: Vec<usize>,
    pub vf_hidden: Vec<usize>,
    pub seed: u64,
    /// Rollout worker threads.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dapg: DapgConfig::default(),
            npg: NpgConfig::default(),
            gae: GaeConfig::default(),
            vf_fit: FitConfig::default(),
            policy_hidden: vec![256, 256],
            vf_hidden: vec![128, 128],
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationMetrics {
    pub k: usize,
    pub mean_return: f64,
    /// Fraction of this iteration's (stochastic) rollouts that succeeded.
    pub success_rate: f64,
    /// Final behaviour-cloning loss, reported on the first record only.
    pub bc_loss: Option<f64>,
    pub demo_weight: f64,
    pub quadratic_form: f64,
    pub cg_residual: f64,
    pub cg_iterations: usize,
    pub step_rejected: bool,
    pub vf_mse: f64,
    /// Seconds since training started.
    pub wall_clock_s: f64,
    pub collect_s: f64,
    pub encode_s: f64,
    pub learn_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainState {
    pub k: usize,
    pub policy: GaussianPolicy,
    pub vf: ValueFunction,
    pub bc: Option<BcReport>,
    pub metrics: Vec<IterationMetrics>,
}

/// A finished or aborted run. On abort `error` is set and `state` holds every
/// completed iteration.
#[derive(Debug)]
pub struct TrainOutcome {
    pub state: TrainState,
    pub error: Option<Error>,
}

pub struct Trainer<'a> {
    env: Env,
    pipeline: &'a ObservationPipeline,
    demo_samples: Samples,
    cfg: TrainConfig,
    rng: ChaCha8Rng,
    state: TrainState,
    started: Instant,
}

impl<'a> Trainer<'a> {
    /// Initialises the policy and baseline from `cfg.seed` and, when demos
    /// are given, warm-starts the policy by behaviour cloning.
    pub fn new(env: Env, pipeline: &'a ObservationPipeline, demos: &DemoSet, cfg: TrainConfig) -> Result<Self> {
        cfg.dapg.validate()?;
        cfg.npg.validate()?;
        cfg.gae.validate()?;
        let obs_dim = pipeline.input_dim(env.proprio_dim());
        let act_dim = env.action_dim();
        if let Some(d) = demos.obs_dim() {
            if d != obs_dim {
                return Err(Error::invalid(format!(
                    "demo observations have {d} entries but the pipeline produces {obs_dim}"
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut policy = GaussianPolicy::init(obs_dim, &cfg.policy_hidden, act_dim, &mut rng)?;
        let vf = ValueFunction::init(obs_dim, &cfg.vf_hidden, cfg.vf_fit, &mut rng)?;
        let bc = if demos.is_empty() || cfg.dapg.bc_epochs == 0 {
            None
        } else {
            Some(bc_pretrain(&mut policy, demos, &cfg.dapg, &mut rng)?)
        };
        let demo_samples = Samples::from_pairs(demos.pairs(), obs_dim, act_dim)?;
        Ok(Trainer {
            env,
            pipeline,
            demo_samples,
            cfg,
            rng,
            state: TrainState {
                k: 0,
                policy,
                vf,
                bc,
                metrics: Vec::new(),
            },
            started: Instant::now(),
        })
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn into_state(self) -> TrainState {
        self.state
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// One full iteration: collect, estimate advantages, take the augmented
    /// natural-gradient step and refit the baseline.
    pub fn step(&mut self) -> Result<&IterationMetrics> {
        let k = self.state.k;
        let cfg = &self.cfg;
        let t0 = Instant::now();
        let (_, enc_before) = self.pipeline.latency();
        let actor = Actor::Policy {
            policy: &self.state.policy,
            deterministic: false,
        };
        let episodes = collect(
            &self.env,
            self.pipeline,
            &actor,
            cfg.seed,
            k as u64,
            cfg.dapg.trajectories_per_iteration,
            cfg.workers,
        )?;
        let collect_s = t0.elapsed().as_secs_f64();
        let encode_s = (self.pipeline.latency().1 - enc_before).as_secs_f64();

        let t1 = Instant::now();
        let trajectories: Vec<_> = episodes.iter().map(|e| e.trajectory.clone()).collect();
        let samples = Samples::from_trajectories(&trajectories)?;
        let advantages = batch_advantages(&trajectories, &self.state.vf, &cfg.gae)?;
        let mut w = if self.demo_samples.is_empty() {
            0.0
        } else {
            demo_weight(&advantages, &cfg.dapg, k)?
        };
        if w < 0.0 && cfg.dapg.clamp_negative_weight {
            w = 0.0;
        }
        let g = augmented_gradient(&self.state.policy, &samples, &advantages, &self.demo_samples, w)?;
        let (quadratic_form, cg_residual, cg_iterations, step_rejected) =
            match npg_step(&self.state.policy, &g, &samples, &cfg.npg) {
                Ok(step) => {
                    if step.report.status == StepStatus::Applied {
                        self.state.policy.set_theta(&step.theta)?;
                    }
                    (
                        step.report.quadratic_form,
                        step.report.cg_residual,
                        step.report.cg_iterations,
                        false,
                    )
                }
                Err(Error::StepRejected { quadratic }) => {
                    warn!("iteration {k}: step rejected (g^T F^-1 g = {quadratic})");
                    (f64::NAN, f64::NAN, 0, true)
                }
                Err(e) => return Err(e),
            };

        let mut obs = Vec::with_capacity(samples.len());
        let mut returns = Vec::with_capacity(samples.len());
        for t in &trajectories {
            obs.extend(t.transitions().iter().map(|tr| tr.observation.clone()));
            returns.extend(t.discounted_return(cfg.gae.gamma)?);
        }
        let fit = self.state.vf.fit(&obs, &returns, &mut self.rng)?;
        let learn_s = t1.elapsed().as_secs_f64();

        let summary = summarize(&episodes);
        let metrics = IterationMetrics {
            k,
            mean_return: summary.mean_return,
            success_rate: summary.success_rate,
            bc_loss: if k == 0 { self.state.bc.map(|b| b.final_loss) } else { None },
            demo_weight: w,
            quadratic_form,
            cg_residual,
            cg_iterations,
            step_rejected,
            vf_mse: fit.final_mse,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            collect_s,
            encode_s,
            learn_s,
        };
        debug!(
            "k={k} return={:.3} success={:.2} w={w:.4e} cg_iters={cg_iterations}",
            metrics.mean_return, metrics.success_rate
        );
        self.state.metrics.push(metrics);
        self.state.k += 1;
        Ok(self.state.metrics.last().expect("just pushed"))
    }

    /// Runs up to `dapg.iterations` iterations. `on_iteration` sees the state
    /// after each one and may stop the run early.
    pub fn run(mut self, mut on_iteration: impl FnMut(&TrainState) -> ControlFlow<()>) -> TrainOutcome {
        while self.state.k < self.cfg.dapg.iterations {
            if let Err(e) = self.step() {
                return TrainOutcome {
                    state: self.state,
                    error: Some(e),
                };
            }
            if on_iteration(&self.state).is_break() {
                break;
            }
        }
        TrainOutcome {
            state: self.state,
            error: None,
        }
    }
}

/// Builds a trainer and runs every configured iteration.
pub fn train(env: Env, pipeline: &ObservationPipeline, demos: &DemoSet, cfg: TrainConfig) -> Result<TrainOutcome> {
    Ok(Trainer::new(env, pipeline, demos, cfg)?.run(|_| ControlFlow::Continue(())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvSpec;
    use crate::trajectory::{Trajectory, Transition};

    fn toy_policy(seed: u64) -> GaussianPolicy {
        GaussianPolicy::init(2, &[4], 1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn demo_set(pairs: &[(Vec<f64>, Vec<f64>)]) -> DemoSet {
        let transitions = pairs
            .iter()
            .map(|(o, a)| Transition {
                observation: o.clone(),
                action: a.clone(),
                reward: 0.0,
                log_prob: 0.0,
                done: false,
            })
            .collect();
        let terminal = pairs[0].0.clone();
        DemoSet::new(vec![Trajectory::new(transitions, terminal).unwrap()], "test").unwrap()
    }

    #[test]
    fn demo_weight_examples() {
        let cfg = DapgConfig::default();
        assert_eq!(demo_weight(&[0.5, 2.0, -1.0], &cfg, 3).unwrap(), 0.01 * 0.95f64.powf(3.0) * 2.0);
        assert!((demo_weight(&[2.0], &cfg, 3).unwrap() - 0.0171475).abs() < 1e-12);
        assert_eq!(demo_weight(&[-1.0, -3.0], &cfg, 0).unwrap(), -0.01);
        let zero = DapgConfig { lam0: 0.0, ..cfg };
        assert_eq!(demo_weight(&[5.0], &zero, 7).unwrap(), 0.0);
        assert!(demo_weight(&[], &cfg, 0).is_err());
    }

    #[test]
    fn demo_weight_decays_geometrically() {
        let cfg = DapgConfig::default();
        for k in 0..50 {
            let a = demo_weight(&[1.7], &cfg, k).unwrap();
            let b = demo_weight(&[1.7], &cfg, k + 1).unwrap();
            assert!((b / a - cfg.lam1).abs() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn bc_zero_loss_is_a_fixed_point() {
        let mut policy = toy_policy(0);
        let obs = vec![0.1, 0.2];
        let x = Samples::from_pairs([(obs.as_slice(), &[0.0][..])], 2, 1).unwrap();
        let mean = policy.spec().forward_batch(policy.mean_params(), x.observations.view()).unwrap();
        let demos = demo_set(&[(obs, vec![mean.outputs()[[0, 0]]])]);
        let before = policy.theta();
        let r = bc_pretrain(&mut policy, &demos, &DapgConfig::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(r.initial_loss, 0.0);
        assert_eq!(r.final_loss, 0.0);
        assert_eq!(policy.theta(), before);
    }

    #[test]
    fn bc_interpolates_a_single_pair() {
        let spec = crate::MlpSpec::new(1, &[], 1).unwrap();
        let mut policy = GaussianPolicy::new(spec.clone(), crate::MlpParams::zeros(&spec), vec![-0.3]).unwrap();
        let demos = demo_set(&[(vec![0.7], vec![0.4])]);
        let cfg = DapgConfig {
            bc_epochs: 3000,
            bc_learning_rate: 0.01,
            ..Default::default()
        };
        let r = bc_pretrain(&mut policy, &demos, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(r.final_loss < 1e-6, "{r:?}");
        assert_eq!(policy.log_std(), &[-0.3]);
    }

    #[test]
    fn bc_rejects_mismatched_demos() {
        let mut policy = toy_policy(0);
        let demos = demo_set(&[(vec![0.7], vec![0.4])]);
        let err = bc_pretrain(&mut policy, &demos, &DapgConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(err, Err(Error::InvalidInput(_))));
        assert!(bc_pretrain(&mut policy, &DemoSet::empty(), &DapgConfig::default(), &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn bc_loss_ignores_demo_order() {
        let policy = toy_policy(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..30)
            .map(|_| (vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], vec![rng.random_range(-1.0..1.0)]))
            .collect();
        let s = |p: &[(Vec<f64>, Vec<f64>)]| Samples::from_pairs(p.iter().map(|(o, a)| (o.as_slice(), a.as_slice())), 2, 1).unwrap();
        let a = bc_loss(&policy, &s(&pairs)).unwrap();
        pairs.shuffle(&mut rng);
        let b = bc_loss(&policy, &s(&pairs)).unwrap();
        assert!((a - b).abs() <= 1e-14 * a.abs());
    }

    #[test]
    fn augmented_gradient_two_term_oracle() {
        let policy = toy_policy(4);
        let (s1, a1) = (vec![0.3, -0.2], vec![0.5]);
        let (s2, a2) = (vec![-0.6, 0.9], vec![-0.1]);
        let on = Samples::from_pairs([(s1.as_slice(), a1.as_slice())], 2, 1).unwrap();
        let demo = Samples::from_pairs([(s2.as_slice(), a2.as_slice())], 2, 1).unwrap();
        let g = augmented_gradient(&policy, &on, &[1.3], &demo, 0.5).unwrap();
        let u1 = policy.grad_log_prob(&s1, &a1).unwrap();
        let u2 = policy.grad_log_prob(&s2, &a2).unwrap();
        for i in 0..g.dim() {
            assert!((g[i] - (1.3 * u1[i] + 0.5 * u2[i])).abs() <= 1e-12);
        }
        let plain = policy_gradient(&policy, &on, &[1.3]).unwrap();
        assert_eq!(augmented_gradient(&policy, &on, &[1.3], &demo, 0.0).unwrap(), plain);
        let none = Samples::from_pairs(std::iter::empty(), 2, 1).unwrap();
        assert_eq!(augmented_gradient(&policy, &on, &[1.3], &none, 0.5).unwrap(), plain);
    }

    #[test]
    fn zero_iterations_returns_bc_policy() {
        let env = Env::new(EnvSpec::point_reacher()).unwrap();
        let pipe = ObservationPipeline::state(6);
        let demos = crate::rollout::generate_demos(&env, &pipe, 2, 0).unwrap().demos;
        let cfg = TrainConfig {
            policy_hidden: vec![8],
            vf_hidden: vec![8],
            dapg: DapgConfig {
                iterations: 0,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = train(env, &pipe, &demos, cfg).unwrap();
        assert!(out.error.is_none());
        assert_eq!(out.state.k, 0);
        assert!(out.state.metrics.is_empty());
        assert!(out.state.bc.unwrap().final_loss < out.state.bc.unwrap().initial_loss);
    }

    #[test]
    fn iterations_advance_k_and_metrics() {
        let env = Env::new(EnvSpec::point_reacher()).unwrap();
        let pipe = ObservationPipeline::state(6);
        let cfg = TrainConfig {
            policy_hidden: vec![8],
            vf_hidden: vec![8],
            dapg: DapgConfig {
                iterations: 3,
                trajectories_per_iteration: 4,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = train(env, &pipe, &DemoSet::empty(), cfg).unwrap();
        assert!(out.error.is_none());
        assert_eq!(out.state.k, 3);
        assert_eq!(out.state.metrics.len(), 3);
        for (i, m) in out.state.metrics.iter().enumerate() {
            assert_eq!(m.k, i);
            assert_eq!(m.demo_weight, 0.0);
            assert!(m.step_rejected || (m.quadratic_form - 0.05).abs() < 5e-3);
        }
    }

    proptest::proptest! {
        #[test]
        fn augmented_gradient_is_linear_in_w(seed in 0u64..500, w1 in -2.0f64..2.0, w2 in -2.0f64..2.0) {
            let policy = toy_policy(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pairs = |n: usize| -> Vec<(Vec<f64>, Vec<f64>)> {
                (0..n)
                    .map(|_| (vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], vec![rng.random_range(-1.0..1.0)]))
                    .collect()
            };
            let (on, demo) = (pairs(12), pairs(7));
            let s = |p: &[(Vec<f64>, Vec<f64>)]| Samples::from_pairs(p.iter().map(|(o, a)| (o.as_slice(), a.as_slice())), 2, 1).unwrap();
            let (on, demo) = (s(&on), s(&demo));
            let adv: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).cos()).collect();
            let g = |w: f64| augmented_gradient(&policy, &on, &adv, &demo, w).unwrap();
            let (g1, g2, g0, g12) = (g(w1), g(w2), g(0.0), g(w1 + w2));
            for i in 0..g0.dim() {
                let lhs = g1[i] + g2[i] - g0[i];
                proptest::prop_assert!((lhs - g12[i]).abs() <= 1e-10 * g12[i].abs().max(1.0));
            }
        }

        #[test]
        fn demo_weight_ratio_is_lam1(max in 0.01f64..100.0, lam1 in 0.5f64..1.0, k in 0usize..500) {
            let cfg = DapgConfig { lam1, ..DapgConfig::default() };
            let a = demo_weight(&[max, -1.0], &cfg, k).unwrap();
            let b = demo_weight(&[max, -1.0], &cfg, k + 1).unwrap();
            proptest::prop_assert!((b / a - lam1).abs() <= 4.0 * f64::EPSILON * lam1);
        }
    }
}
