//! Diagonal-Gaussian policy with a tanh MLP mean and state-independent
//! log-standard-deviation.
//!
//! The parameter vector `theta` is the mean network's flat parameters
//! followed by the `action_dim` log-std entries.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Zip};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::flat::FlatVector;
use crate::nnet::{self, BatchTrace, MlpParams, MlpSpec};
use crate::trajectory::Trajectory;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    spec: MlpSpec,
    params: MlpParams,
    log_std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new(spec: MlpSpec, params: MlpParams, log_std: Vec<f64>) -> Result<Self> {
        ensure_len(params.flat.dim(), spec.param_count(), "mean-network parameters")?;
        ensure_len(log_std.len(), spec.output_dim, "log_std")?;
        ensure_finite(&log_std, "log_std")?;
        let log_std = log_std
            .into_iter()
            .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect();
        Ok(GaussianPolicy { spec, params, log_std })
    }

    /// Freshly initialised policy with unit standard deviation.
    pub fn init<R: Rng + ?Sized>(
        obs_dim: usize,
        hidden: &[usize],
        action_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let spec = MlpSpec::new(obs_dim, hidden, action_dim)?;
        let params = spec.init(rng);
        GaussianPolicy::new(spec, params, vec![0.0; action_dim])
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn mean_params(&self) -> &MlpParams {
        &self.params
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn obs_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn action_dim(&self) -> usize {
        self.spec.output_dim
    }

    pub fn theta_dim(&self) -> usize {
        self.spec.param_count() + self.action_dim()
    }

    pub fn theta(&self) -> FlatVector {
        let mut v = self.params.flat.as_slice().to_vec();
        v.extend_from_slice(&self.log_std);
        v.into()
    }

    /// Replaces all parameters; log-std entries are clamped to
    /// `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub fn set_theta(&mut self, theta: &FlatVector) -> Result<()> {
        ensure_len(theta.dim(), self.theta_dim(), "theta")?;
        ensure_finite(theta, "theta")?;
        let n = self.spec.param_count();
        self.params.flat.copy_from_slice(&theta[..n]);
        for (dst, src) in self.log_std.iter_mut().zip(&theta[n..]) {
            *dst = src.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
        Ok(())
    }

    pub(crate) fn mean_params_mut(&mut self) -> &mut MlpParams {
        &mut self.params
    }

    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>> {
        ensure_len(obs.len(), self.obs_dim(), "observation")?;
        ensure_finite(obs, "observation")?;
        self.spec.forward(&self.params, obs)
    }

    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        rng: &mut R,
        deterministic: bool,
    ) -> Result<(Vec<f64>, f64)> {
        let mean = self.mean(obs)?;
        let action = if deterministic {
            mean.clone()
        } else {
            mean.iter()
                .zip(&self.log_std)
                .map(|(mu, ls)| {
                    let z: f64 = rng.sample(StandardNormal);
                    mu + ls.exp() * z
                })
                .collect()
        };
        let lp = gaussian_log_density(&mean, &self.log_std, &action);
        Ok((action, lp))
    }

    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        ensure_len(action.len(), self.action_dim(), "action")?;
        ensure_finite(action, "action")?;
        let mean = self.mean(obs)?;
        Ok(gaussian_log_density(&mean, &self.log_std, action))
    }

    /// Exact gradient of `log_prob(obs, action)` with respect to `theta`.
    pub fn grad_log_prob(&self, obs: &[f64], action: &[f64]) -> Result<FlatVector> {
        ensure_len(action.len(), self.action_dim(), "action")?;
        ensure_finite(action, "action")?;
        let mean = self.mean(obs)?;
        let mut mean_coef = Vec::with_capacity(mean.len());
        let mut log_std_grad = Vec::with_capacity(mean.len());
        for ((a, mu), ls) in action.iter().zip(&mean).zip(&self.log_std) {
            let var = (2.0 * ls).exp();
            let r = a - mu;
            mean_coef.push(r / var);
            log_std_grad.push(r * r / var - 1.0);
        }
        let (grad, _) = self.spec.backward(&self.params, obs, &mean_coef)?;
        let mut grad = grad.into_vec();
        grad.extend(log_std_grad);
        Ok(grad.into())
    }

    pub fn write_checkpoint(&self, path: &Path) -> Result<()> {
        nnet::write_checkpoint(path, &self.spec, &self.params, &self.log_std)
    }

    pub fn read_checkpoint(path: &Path) -> Result<Self> {
        let (spec, params, log_std) = nnet::read_checkpoint(path)?;
        if log_std.len() != spec.output_dim {
            return Err(Error::format(
                path,
                0,
                format!("expected {} log-std values, found {}", spec.output_dim, log_std.len()),
            ));
        }
        GaussianPolicy::new(spec, params, log_std)
    }
}

/// `-sum_j [(a_j - mu_j)^2 / (2 sigma_j^2) + log sigma_j] - (m/2) log 2 pi`.
pub fn gaussian_log_density(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    let m = mean.len() as f64;
    let quad: f64 = mean
        .iter()
        .zip(log_std)
        .zip(action)
        .map(|((mu, ls), a)| {
            let r = a - mu;
            r * r / (2.0 * (2.0 * ls).exp()) + ls
        })
        .sum();
    -quad - 0.5 * m * (2.0 * PI).ln()
}

/// Row-stacked (observation, action) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub observations: Array2<f64>,
    pub actions: Array2<f64>,
}

impl Samples {
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a [f64], &'a [f64])>,
        obs_dim: usize,
        act_dim: usize,
    ) -> Result<Self> {
        let mut obs = Vec::new();
        let mut act = Vec::new();
        for (o, a) in pairs {
            ensure_len(o.len(), obs_dim, "observation")?;
            ensure_len(a.len(), act_dim, "action")?;
            obs.extend_from_slice(o);
            act.extend_from_slice(a);
        }
        let n = obs.len() / obs_dim.max(1);
        Ok(Samples {
            observations: Array2::from_shape_vec((n, obs_dim), obs).expect("checked widths"),
            actions: Array2::from_shape_vec((n, act_dim), act).expect("checked widths"),
        })
    }

    pub fn from_trajectories(trajectories: &[Trajectory]) -> Result<Self> {
        let first = trajectories
            .first()
            .ok_or_else(|| Error::invalid("no trajectories"))?;
        Samples::from_pairs(
            trajectories
                .iter()
                .flat_map(|t| t.transitions())
                .map(|tr| (tr.observation.as_slice(), tr.action.as_slice())),
            first.obs_dim(),
            first.act_dim(),
        )
    }

    pub fn len(&self) -> usize {
        self.observations.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scores<'p>(&self, policy: &'p GaussianPolicy) -> Result<ScoreBatch<'p>> {
        ScoreBatch::new(policy, self.observations.view(), self.actions.view())
    }
}

/// Score vectors `u_i = grad_theta log pi(a_i | s_i)` for a fixed batch,
/// kept in factored form (network activations plus per-output
/// coefficients) so that `sum_i w_i u_i` and `u_i · v` each cost one
/// batched reverse or forward pass.
pub struct ScoreBatch<'p> {
    policy: &'p GaussianPolicy,
    trace: BatchTrace,
    mean_coef: Array2<f64>,
    log_std_score: Array2<f64>,
}

impl<'p> ScoreBatch<'p> {
    pub fn new(
        policy: &'p GaussianPolicy,
        observations: ArrayView2<'_, f64>,
        actions: ArrayView2<'_, f64>,
    ) -> Result<Self> {
        if observations.nrows() != actions.nrows() {
            return Err(Error::invalid(format!(
                "{} observations but {} actions",
                observations.nrows(),
                actions.nrows()
            )));
        }
        ensure_len(actions.ncols(), policy.action_dim(), "action width")?;
        if observations.iter().chain(actions.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite entry in score batch"));
        }
        let trace = policy.spec.forward_batch(&policy.params, observations)?;
        let mut mean_coef = actions.to_owned();
        let mut log_std_score = Array2::zeros(actions.raw_dim());
        let inv_var: Vec<f64> = policy.log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();
        for ((mut coef, mut score), mean) in mean_coef
            .rows_mut()
            .into_iter()
            .zip(log_std_score.rows_mut())
            .zip(trace.outputs().rows())
        {
            for j in 0..inv_var.len() {
                let r = coef[j] - mean[j];
                coef[j] = r * inv_var[j];
                score[j] = r * r * inv_var[j] - 1.0;
            }
        }
        Ok(ScoreBatch {
            policy,
            trace,
            mean_coef,
            log_std_score,
        })
    }

    pub fn len(&self) -> usize {
        self.mean_coef.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.policy.theta_dim()
    }

    /// `sum_i weights[i] * u_i`.
    pub fn weighted_sum(&self, weights: &[f64]) -> Result<FlatVector> {
        ensure_len(weights.len(), self.len(), "score weights")?;
        let mut cot = self.mean_coef.clone();
        for (mut row, w) in cot.rows_mut().into_iter().zip(weights) {
            row *= *w;
        }
        let mut grad = self.policy.spec.vjp_batch(&self.policy.params, &self.trace, cot.view())?;
        for j in 0..self.policy.action_dim() {
            let col = self.log_std_score.column(j);
            grad.push(col.iter().zip(weights).map(|(s, w)| s * w).sum());
        }
        Ok(grad.into())
    }

    /// `[u_i · v]_i`.
    pub fn dots(&self, v: &FlatVector) -> Result<Vec<f64>> {
        ensure_len(v.dim(), self.dim(), "direction")?;
        let n = self.policy.spec.param_count();
        let jv = self.policy.spec.jvp_batch(&self.policy.params, &self.trace, &v[..n])?;
        let v_ls = &v[n..];
        let mut out = vec![0.0; self.len()];
        Zip::from(&mut out)
            .and(jv.rows())
            .and(self.mean_coef.rows())
            .and(self.log_std_score.rows())
            .for_each(|o, jv, c, s| {
                let mut acc = 0.0;
                for j in 0..v_ls.len() {
                    acc += c[j] * jv[j] + s[j] * v_ls[j];
                }
                *o = acc;
            });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_policy(seed: u64, obs_dim: usize, hidden: &[usize], act_dim: usize) -> GaussianPolicy {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = GaussianPolicy::init(obs_dim, hidden, act_dim, &mut rng).unwrap();
        let mut theta = p.theta();
        let n = p.spec().param_count();
        for v in &mut theta[n..] {
            *v = rng.random_range(-1.0..0.5);
        }
        p.set_theta(&theta).unwrap();
        p
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn with_mean_identity(log_std: Vec<f64>) -> GaussianPolicy {
        let m = log_std.len();
        let spec = MlpSpec::new(m, &[], m).unwrap();
        let mut flat = vec![0.0; spec.param_count()];
        for i in 0..m {
            flat[i * m + i] = 1.0;
        }
        GaussianPolicy::new(spec.clone(), MlpParams::new(&spec, flat.into()).unwrap(), log_std).unwrap()
    }

    #[test]
    fn log_prob_closed_forms() {
        let p = with_mean_identity(vec![0.0]);
        assert!((p.log_prob(&[0.3], &[0.3]).unwrap() - (-0.9189385332046727)).abs() < 1e-12);
        let p = with_mean_identity(vec![0.0, 0.0]);
        assert!((p.log_prob(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - (-2.3378770664093453)).abs() < 1e-12);
    }

    #[test]
    fn log_prob_rejects_non_finite() {
        let p = with_mean_identity(vec![0.0]);
        assert!(matches!(p.log_prob(&[f64::NAN], &[0.0]), Err(Error::InvalidInput(_))));
        assert!(p.log_prob(&[0.0], &[f64::INFINITY]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(p.act(&[f64::NAN], &mut rng, false).is_err());
    }

    #[test]
    fn deterministic_zero_params_act() {
        let spec = MlpSpec::new(3, &[4], 2).unwrap();
        let p = GaussianPolicy::new(spec.clone(), MlpParams::zeros(&spec), vec![0.0; 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, _) = p.act(&[1.0, 2.0, 3.0], &mut rng, true).unwrap();
        assert_eq!(a, vec![0.0, 0.0]);
    }

    #[test]
    fn seeded_act_replays() {
        let p = random_policy(4, 3, &[5], 2);
        let obs = [0.1, 0.2, -0.3];
        let a1 = p.act(&obs, &mut ChaCha8Rng::seed_from_u64(9), false).unwrap();
        let a2 = p.act(&obs, &mut ChaCha8Rng::seed_from_u64(9), false).unwrap();
        assert_eq!(a1, a2);
    }

    #[test]
    fn sampled_log_prob_matches_density() {
        let p = random_policy(5, 3, &[5], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let obs = random_vec(&mut rng, 3);
            let (a, lp) = p.act(&obs, &mut rng, false).unwrap();
            // direct product of univariate normal densities
            let mean = p.mean(&obs).unwrap();
            let mut density = 1.0;
            for j in 0..2 {
                let sigma = p.log_std()[j].exp();
                let z = (a[j] - mean[j]) / sigma;
                density *= (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt());
            }
            assert!((lp - density.ln()).abs() < 1e-12);
            assert_eq!(lp, p.log_prob(&obs, &a).unwrap());
        }
    }

    #[test]
    fn grad_log_prob_closed_forms() {
        let p = random_policy(6, 3, &[4], 2);
        let obs = [0.5, -0.5, 0.1];
        let mean = p.mean(&obs).unwrap();
        let g = p.grad_log_prob(&obs, &mean).unwrap();
        let n = p.spec().param_count();
        assert!(g[..n].iter().all(|v| *v == 0.0));
        assert_eq!(&g[n..], &[-1.0, -1.0]);

        let p = with_mean_identity(vec![0.0]);
        let g = p.grad_log_prob(&[0.0], &[2.0]).unwrap();
        assert_eq!(g[g.dim() - 1], 3.0);
    }

    #[test]
    fn set_theta_clamps_log_std() {
        let mut p = random_policy(7, 2, &[3], 2);
        let mut theta = p.theta();
        let n = theta.dim();
        theta[n - 2] = -40.0;
        theta[n - 1] = 9.0;
        p.set_theta(&theta).unwrap();
        assert_eq!(p.log_std(), &[LOG_STD_MIN, LOG_STD_MAX]);
    }

    #[test]
    fn density_integrates_to_one() {
        let p = random_policy(8, 2, &[3], 1);
        let obs = [0.3, -0.7];
        let mu = p.mean(&obs).unwrap()[0];
        let sigma = p.log_std()[0].exp();
        let n = 100_000;
        let (lo, hi) = (mu - 8.0 * sigma, mu + 8.0 * sigma);
        let h = (hi - lo) / n as f64;
        let mut total = 0.0;
        for i in 0..=n {
            let a = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            total += w * p.log_prob(&obs, &[a]).unwrap().exp();
        }
        assert!((total * h - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn score_has_zero_mean() {
        let p = random_policy(9, 3, &[4], 2);
        let obs = [0.2, 0.4, -0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let samples: Vec<FlatVector> = (0..n)
            .map(|_| {
                let (a, _) = p.act(&obs, &mut rng, false).unwrap();
                p.grad_log_prob(&obs, &a).unwrap()
            })
            .collect();
        for i in 0..p.theta_dim() {
            let mean = samples.iter().map(|g| g[i]).sum::<f64>() / n as f64;
            let var = samples.iter().map(|g| (g[i] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let stderr = (var / n as f64).sqrt();
            assert!(mean.abs() <= 5.0 * stderr + 1e-12, "coordinate {i}: {mean} vs {stderr}");
        }
    }

    #[test]
    fn mean_action_is_mode() {
        let p = random_policy(10, 3, &[4], 3);
        let obs = [0.1, 0.1, 0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, lp) = p.act(&obs, &mut rng, true).unwrap();
        for j in 0..3 {
            for eps in [-1e-3, 1e-3] {
                let mut b = a.clone();
                b[j] += eps;
                assert!(p.log_prob(&obs, &b).unwrap() < lp);
            }
        }
    }

    #[test]
    fn score_batch_matches_per_sample() {
        let p = random_policy(12, 4, &[5, 3], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let obs: Vec<Vec<f64>> = (0..9).map(|_| random_vec(&mut rng, 4)).collect();
        let acts: Vec<Vec<f64>> = (0..9).map(|_| random_vec(&mut rng, 2)).collect();
        let o = nnet::stack_rows(obs.iter().map(Vec::as_slice), 4).unwrap();
        let a = nnet::stack_rows(acts.iter().map(Vec::as_slice), 2).unwrap();
        let batch = ScoreBatch::new(&p, o.view(), a.view()).unwrap();
        let weights = random_vec(&mut rng, 9);
        let v: FlatVector = random_vec(&mut rng, p.theta_dim()).into();

        let scores: Vec<FlatVector> = obs.iter().zip(&acts).map(|(o, a)| p.grad_log_prob(o, a).unwrap()).collect();
        let ws = batch.weighted_sum(&weights).unwrap();
        let dots = batch.dots(&v).unwrap();
        for i in 0..p.theta_dim() {
            let expect: f64 = scores.iter().zip(&weights).map(|(s, w)| s[i] * w).sum();
            assert!((ws[i] - expect).abs() < 1e-12);
        }
        for (d, s) in dots.iter().zip(&scores) {
            assert!((d - s.dot(&v).unwrap()).abs() < 1e-12);
        }
    }

    fn fd_relative_error(seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden: Vec<usize> = (0..rng.random_range(0..3)).map(|_| rng.random_range(1..=8)).collect();
        let obs_dim = rng.random_range(1..=8);
        let act_dim = rng.random_range(1..=4);
        let p = random_policy(seed ^ 0xabc, obs_dim, &hidden, act_dim);
        let obs = random_vec(&mut rng, obs_dim);
        let (a, _) = p.act(&obs, &mut rng, false).unwrap();
        let g = p.grad_log_prob(&obs, &a).unwrap();
        let theta = p.theta();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..theta.dim() {
            let mut q = p.clone();
            let mut t = theta.clone();
            t[i] += h;
            q.set_theta(&t).unwrap();
            let up = q.log_prob(&obs, &a).unwrap();
            t[i] -= 2.0 * h;
            q.set_theta(&t).unwrap();
            let down = q.log_prob(&obs, &a).unwrap();
            let fd = (up - down) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-3));
        }
        worst
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn grad_log_prob_matches_fd(seed in any::<u64>()) {
            prop_assert!(fd_relative_error(seed) <= 1e-5);
        }
    }
}
