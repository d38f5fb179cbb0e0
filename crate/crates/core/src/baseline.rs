//! State-value baseline regressed onto Monte-Carlo returns.
//!
//! Targets are standardised to zero mean and unit variance at every fit and
//! the network learns the standardised value; `predict` maps back to the
//! reward scale. Reported MSE values are in the standardised space.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::nnet::{self, MlpParams, MlpSpec};

const MIN_TARGET_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            batch_size: 64,
            epochs: 2,
            learning_rate: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub initial_mse: f64,
    pub final_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    spec: MlpSpec,
    params: MlpParams,
    pub fit_config: FitConfig,
    target_mean: f64,
    target_scale: f64,
}

impl ValueFunction {
    pub fn init<R: Rng + ?Sized>(
        obs_dim: usize,
        hidden: &[usize],
        fit_config: FitConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let spec = MlpSpec::new(obs_dim, hidden, 1)?;
        let params = spec.init(rng);
        ValueFunction::from_parts(spec, params, fit_config)
    }

    pub fn from_parts(spec: MlpSpec, params: MlpParams, fit_config: FitConfig) -> Result<Self> {
        if spec.output_dim != 1 {
            return Err(Error::invalid("value network must have a single output"));
        }
        let params = MlpParams::new(&spec, params.flat)?;
        Ok(ValueFunction {
            spec,
            params,
            fit_config,
            target_mean: 0.0,
            target_scale: 1.0,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn params(&self) -> &MlpParams {
        &self.params
    }

    pub fn predict(&self, obs: &[f64]) -> Result<f64> {
        ensure_len(obs.len(), self.obs_dim(), "observation")?;
        let out = self.spec.forward(&self.params, obs)?;
        Ok(self.target_mean + self.target_scale * out[0])
    }

    /// Predictions for many observations at once.
    pub fn predict_many<'a>(&self, observations: impl IntoIterator<Item = &'a [f64]>) -> Result<Vec<f64>> {
        let x = nnet::stack_rows(observations, self.obs_dim())?;
        let trace = self.spec.forward_batch(&self.params, x.view())?;
        Ok(trace
            .outputs()
            .column(0)
            .iter()
            .map(|v| self.target_mean + self.target_scale * v)
            .collect())
    }

    /// Minibatch gradient descent on the mean squared error against the
    /// standardised targets.
    pub fn fit<R: Rng + ?Sized>(
        &mut self,
        observations: &[Vec<f64>],
        targets: &[f64],
        rng: &mut R,
    ) -> Result<FitReport> {
        if observations.is_empty() {
            return Err(Error::invalid("value fit needs at least one sample"));
        }
        ensure_len(targets.len(), observations.len(), "targets")?;
        ensure_finite(targets, "targets")?;
        let x = nnet::stack_rows(observations.iter().map(Vec::as_slice), self.obs_dim())?;
        ensure_finite(x.as_slice().expect("standard layout"), "observations")?;

        let n = targets.len() as f64;
        let mean = targets.iter().sum::<f64>() / n;
        let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
        let scale = if var.sqrt() < MIN_TARGET_SCALE { 1.0 } else { var.sqrt() };
        self.target_mean = mean;
        self.target_scale = scale;
        let y: Vec<f64> = targets.iter().map(|t| (t - mean) / scale).collect();

        let initial_mse = self.standardized_mse(&x, &y)?;
        let cfg = self.fit_config;
        let batch = cfg.batch_size.max(1);
        let mut order: Vec<usize> = (0..y.len()).collect();
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(batch) {
                let xb = x.select(ndarray::Axis(0), chunk);
                let trace = self.spec.forward_batch(&self.params, xb.view())?;
                let scale = 2.0 / chunk.len() as f64;
                let mut cot = Array2::zeros((chunk.len(), 1));
                for (r, &i) in chunk.iter().enumerate() {
                    cot[[r, 0]] = scale * (trace.outputs()[[r, 0]] - y[i]);
                }
                let grad = self.spec.vjp_batch(&self.params, &trace, cot.view())?;
                for (p, g) in self.params.flat.iter_mut().zip(&grad) {
                    *p -= cfg.learning_rate * g;
                }
            }
        }
        let final_mse = self.standardized_mse(&x, &y)?;
        Ok(FitReport {
            initial_mse,
            final_mse,
        })
    }

    fn standardized_mse(&self, x: &Array2<f64>, y: &[f64]) -> Result<f64> {
        let trace = self.spec.forward_batch(&self.params, x.view())?;
        let out = trace.outputs();
        Ok(out
            .column(0)
            .iter()
            .zip(y)
            .map(|(p, t)| (p - t).powi(2))
            .sum::<f64>()
            / y.len() as f64)
    }
}
