use dapg_core::rollout::{evaluate, generate_demos};
use dapg_core::{train, DemoSet, EncoderSpec, Env, EnvSpec, GaussianPolicy, ObservationPipeline, TrainConfig};
use tempfile::TempDir;

fn reacher() -> (Env, ObservationPipeline) {
    let spec = EnvSpec::point_reacher();
    let encoder = EncoderSpec::Identity.build(&spec).unwrap();
    (Env::new(spec).unwrap(), ObservationPipeline::new(encoder, false))
}

fn small_config(workers: usize) -> TrainConfig {
    let mut cfg = TrainConfig {
        policy_hidden: vec![16],
        vf_hidden: vec![16],
        workers,
        ..TrainConfig::default()
    };
    cfg.dapg.iterations = 3;
    cfg.dapg.trajectories_per_iteration = 6;
    cfg
}

#[test]
fn demos_survive_a_disk_round_trip() {
    let (env, pipe) = reacher();
    let report = generate_demos(&env, &pipe, 4, 11).unwrap();
    assert_eq!(report.demos.trajectories.len(), 4);
    let tmp = TempDir::new().unwrap();
    report.demos.write_dir(tmp.path()).unwrap();
    assert_eq!(DemoSet::read_dir(tmp.path()).unwrap(), report.demos);
}

#[test]
fn training_does_not_depend_on_worker_count() {
    let (env, pipe) = reacher();
    let demos = generate_demos(&env, &pipe, 3, 2).unwrap().demos;
    let one = train(env.clone(), &pipe, &demos, small_config(1)).unwrap();
    let three = train(env, &pipe, &demos, small_config(3)).unwrap();
    assert!(one.error.is_none() && three.error.is_none());
    assert_eq!(one.state.k, 3);
    assert_eq!(one.state.policy.theta(), three.state.policy.theta());
    let returns = |o: &dapg_core::dapg::TrainOutcome| o.state.metrics.iter().map(|m| m.mean_return).collect::<Vec<_>>();
    assert_eq!(returns(&one), returns(&three));
}

#[test]
fn checkpoint_round_trip_preserves_evaluation() {
    let (env, pipe) = reacher();
    let demos = generate_demos(&env, &pipe, 3, 5).unwrap().demos;
    let out = train(env.clone(), &pipe, &demos, small_config(1)).unwrap();
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("p.ckpt");
    out.state.policy.write_checkpoint(&path).unwrap();
    let loaded = GaussianPolicy::read_checkpoint(&path).unwrap();
    assert_eq!(loaded.theta(), out.state.policy.theta());
    assert_eq!(
        evaluate(&env, &pipe, &loaded, 5, 9, 1).unwrap(),
        evaluate(&env, &pipe, &out.state.policy, 5, 9, 2).unwrap()
    );
}
