//! Simulation and reference implementation of federated policy-gradient
//! methods with momentum variance reduction.
//!
//! The numerical core is generic over the scalar type ([`Scalar`], implemented
//! for `f32` and `f64`); the aliases below fix it to `f64`, which is what the
//! harness and the exact oracles use.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envs;
pub mod error;
pub mod estimators;
pub mod federation;
pub mod oracle;
pub mod policies;
pub mod rng;
pub mod scalar;
pub mod vector;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use vector::{Direction, PolicyParams};

pub type Params = PolicyParams<f64>;
pub type Dir = Direction<f64>;
pub type Tabular = envs::TabularMdp<f64>;
pub type PointMass = envs::PointMassEnv<f64>;
pub type Fleet = envs::Fleet<f64>;
pub type FedConfig = federation::FedConfig<f64>;
pub type ServerState = federation::ServerState<f64>;
pub type RunLog = federation::RunLog<f64>;
pub type Gaussian = policies::LinearGaussianPolicy<f64>;

/// Single-precision aliases.
pub mod f32 {
    pub type Params = crate::PolicyParams<f32>;
    pub type Dir = crate::Direction<f32>;
    pub type Tabular = crate::envs::TabularMdp<f32>;
    pub type FedConfig = crate::federation::FedConfig<f32>;
}
