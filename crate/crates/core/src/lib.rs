//! Demonstration-augmented natural policy gradient.
//!
//! The crate is organised bottom-up: flat vectors and trajectories, a small
//! tanh MLP with analytic gradients, the Gaussian policy and value baseline,
//! advantage estimation, the natural-gradient machinery, and finally the
//! demo-augmented training loop. Observation encoders and the built-in
//! environments live alongside so that the whole pipeline runs from this one
//! crate.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advantage;
pub mod baseline;
pub mod dapg;
pub mod encoders;
pub mod envs;
pub mod error;
pub mod flat;
pub mod nnet;
pub mod npg;
pub mod policy;
pub mod rollout;
pub mod trajectory;

pub use advantage::{batch_advantages, gae, GaeConfig};
pub use baseline::{FitConfig, ValueFunction};
pub use dapg::{train, DapgConfig, TrainConfig, TrainState, Trainer};
pub use encoders::{EncoderSpec, FrozenEncoder, ObservationPipeline};
pub use envs::{Env, EnvSpec};
pub use error::{Error, Result};
pub use flat::{flat_axpy, FlatVector};
pub use nnet::{MlpParams, MlpSpec};
pub use npg::{conjugate_gradient, fisher_vector_product, npg_step, policy_gradient, NpgConfig};
pub use policy::{GaussianPolicy, Samples};
pub use trajectory::{discounted_return, DemoSet, Trajectory, Transition};
