//! Natural policy gradient: the sample policy gradient, Fisher-vector
//! products of the empirical Fisher matrix, a conjugate-gradient solver, and
//! the normalised ascent step
//!
//! ```text
//! theta' = theta + sqrt(delta / (g^T F^-1 g)) F^-1 g
//! ```

use log::warn;

use crate::error::{ensure_len, Error, Result};
use crate::flat::FlatVector;
use crate::policy::{GaussianPolicy, Samples, ScoreBatch};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpgConfig {
    /// Target value of the quadratic form `dtheta^T F dtheta`.
    pub step_size_delta: f64,
    pub cg_iterations: usize,
    pub cg_residual_tol: f64,
    pub fisher_damping: f64,
}

impl Default for NpgConfig {
    fn default() -> Self {
        NpgConfig {
            step_size_delta: 0.05,
            cg_iterations: 100,
            cg_residual_tol: 1e-10,
            fisher_damping: 1.0,
        }
    }
}

impl NpgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size_delta > 0.0) {
            return Err(Error::invalid("step_size_delta must be positive"));
        }
        if !(self.fisher_damping >= 0.0) {
            return Err(Error::invalid("fisher_damping must be non-negative"));
        }
        if self.cg_iterations == 0 {
            return Err(Error::invalid("cg_iterations must be at least 1"));
        }
        Ok(())
    }
}

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &FlatVector) -> Result<FlatVector>;
}

/// `F v = (1/N) sum_i u_i (u_i^T v) + damping v` over a fixed sample set.
pub struct FisherOperator<'p> {
    scores: ScoreBatch<'p>,
    damping: f64,
}

impl<'p> FisherOperator<'p> {
    pub fn new(policy: &'p GaussianPolicy, samples: &Samples, damping: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("Fisher matrix needs at least one sample"));
        }
        Ok(FisherOperator {
            scores: samples.scores(policy)?,
            damping,
        })
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }
}

impl LinearOperator for FisherOperator<'_> {
    fn dim(&self) -> usize {
        self.scores.dim()
    }

    fn apply(&self, v: &FlatVector) -> Result<FlatVector> {
        let n = self.scores.len() as f64;
        let weights: Vec<f64> = self.scores.dots(v)?.into_iter().map(|d| d / n).collect();
        let mut out = self.scores.weighted_sum(&weights)?;
        if self.damping != 0.0 {
            out.add_scaled(self.damping, v)?;
        }
        Ok(out)
    }
}

pub fn fisher_vector_product(
    policy: &GaussianPolicy,
    samples: &Samples,
    v: &FlatVector,
    damping: f64,
) -> Result<FlatVector> {
    ensure_len(v.dim(), policy.theta_dim(), "direction")?;
    FisherOperator::new(policy, samples, damping)?.apply(v)
}

/// `g = (1/N) sum_i grad log pi(a_i|s_i) A_i`.
pub fn policy_gradient(policy: &GaussianPolicy, samples: &Samples, advantages: &[f64]) -> Result<FlatVector> {
    if samples.is_empty() {
        return Err(Error::invalid("policy gradient of an empty batch"));
    }
    ensure_len(advantages.len(), samples.len(), "advantages")?;
    let n = samples.len() as f64;
    let weights: Vec<f64> = advantages.iter().map(|a| a / n).collect();
    samples.scores(policy)?.weighted_sum(&weights)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: FlatVector,
    pub iterations: usize,
    /// `||b - A x|| / ||b||` from the CG recurrence.
    pub residual: f64,
    pub converged: bool,
}

pub fn conjugate_gradient(op: &dyn LinearOperator, b: &FlatVector, cfg: &NpgConfig) -> Result<CgSolution> {
    conjugate_gradient_observed(op, b, cfg, |_, _| {})
}

/// Conjugate gradient from `x0 = 0`; `observe(k, x_k)` is called after every
/// iteration.
pub fn conjugate_gradient_observed(
    op: &dyn LinearOperator,
    b: &FlatVector,
    cfg: &NpgConfig,
    mut observe: impl FnMut(usize, &FlatVector),
) -> Result<CgSolution> {
    ensure_len(b.dim(), op.dim(), "right-hand side")?;
    if !b.is_finite() {
        return Err(Error::invalid("right-hand side is not finite"));
    }
    let b_norm = b.norm();
    let mut x = FlatVector::zeros(b.dim());
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x,
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r)?;
    let mut iterations = 0;
    let mut converged = false;
    for k in 1..=cfg.cg_iterations {
        let ap = op.apply(&p)?;
        let pap = p.dot(&ap)?;
        if !pap.is_finite() || pap <= 0.0 {
            return Err(Error::NumericalFailure {
                iteration: k,
                detail: format!("curvature p^T A p = {pap}"),
            });
        }
        let alpha = rr / pap;
        x.add_scaled(alpha, &p)?;
        r.add_scaled(-alpha, &ap)?;
        let rr_next = r.dot(&r)?;
        if !rr_next.is_finite() || !x.is_finite() {
            return Err(Error::NumericalFailure {
                iteration: k,
                detail: "non-finite iterate".into(),
            });
        }
        iterations = k;
        observe(k, &x);
        if rr_next.sqrt() / b_norm <= cfg.cg_residual_tol {
            rr = rr_next;
            converged = true;
            break;
        }
        let beta = rr_next / rr;
        for (pi, ri) in p.iter_mut().zip(r.iter()) {
            *pi = ri + beta * *pi;
        }
        rr = rr_next;
    }
    Ok(CgSolution {
        x,
        iterations,
        residual: rr.sqrt() / b_norm,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Applied,
    /// The gradient was exactly zero; parameters are returned unchanged.
    ZeroGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub status: StepStatus,
    /// `dtheta^T F dtheta` (with damping) for the step actually taken.
    pub quadratic_form: f64,
    pub cg_residual: f64,
    pub cg_iterations: usize,
    /// `g^T F^-1 g` as estimated by CG.
    pub g_dot_x: f64,
    pub step_norm: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpgStep {
    pub theta: FlatVector,
    pub delta_theta: FlatVector,
    pub report: StepReport,
}

/// Normalised natural-gradient step on `policy` with the Fisher matrix of
/// `samples`. Returns the new parameters without modifying the policy.
pub fn npg_step(policy: &GaussianPolicy, g: &FlatVector, samples: &Samples, cfg: &NpgConfig) -> Result<NpgStep> {
    cfg.validate()?;
    let fisher = FisherOperator::new(policy, samples, cfg.fisher_damping)?;
    let mut step = npg_step_with_operator(&fisher, &policy.theta(), g, cfg)?;
    step.report.damping = cfg.fisher_damping;
    Ok(step)
}

/// The normalised step for an arbitrary metric operator.
pub fn npg_step_with_operator(
    metric: &dyn LinearOperator,
    theta: &FlatVector,
    g: &FlatVector,
    cfg: &NpgConfig,
) -> Result<NpgStep> {
    ensure_len(g.dim(), theta.dim(), "gradient")?;
    ensure_len(metric.dim(), theta.dim(), "metric operator")?;
    if g.iter().all(|v| *v == 0.0) {
        warn!("zero policy gradient; natural-gradient step skipped");
        return Ok(NpgStep {
            theta: theta.clone(),
            delta_theta: FlatVector::zeros(theta.dim()),
            report: StepReport {
                status: StepStatus::ZeroGradient,
                quadratic_form: 0.0,
                cg_residual: 0.0,
                cg_iterations: 0,
                g_dot_x: 0.0,
                step_norm: 0.0,
                damping: 0.0,
            },
        });
    }
    let solution = conjugate_gradient(metric, g, cfg)?;
    let g_dot_x = g.dot(&solution.x)?;
    if !(g_dot_x > 0.0) {
        return Err(Error::StepRejected { quadratic: g_dot_x });
    }
    let alpha = (cfg.step_size_delta / g_dot_x).sqrt();
    let delta_theta = solution.x.scaled(alpha);
    let quadratic_form = delta_theta.dot(&metric.apply(&delta_theta)?)?;
    let mut new_theta = theta.clone();
    new_theta.add_scaled(1.0, &delta_theta)?;
    Ok(NpgStep {
        theta: new_theta,
        report: StepReport {
            status: StepStatus::Applied,
            quadratic_form,
            cg_residual: solution.residual,
            cg_iterations: solution.iterations,
            g_dot_x,
            step_norm: delta_theta.norm(),
            damping: 0.0,
        },
        delta_theta,
    })
}
