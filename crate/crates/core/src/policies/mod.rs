//! Differentiable policy families with analytic score and score-Hessian
//! products.

mod gaussian;
mod grid_gaussian;
mod normal;
mod softmax;

use std::fmt::Debug;

use rand::Rng;

use crate::error::Result;
use crate::scalar::Scalar;
use crate::vector::{Direction, PolicyParams};

pub use gaussian::{LinearGaussianPolicy, PolynomialFeatures};
pub use grid_gaussian::GridGaussianPolicy;
pub use softmax::SoftmaxPolicy;

/// Bounds `‖∇ log π‖ ≤ G` and `‖∇² log π‖₂ ≤ M` holding for every state,
/// action and parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyBounds<T> {
    pub g: T,
    pub m: T,
}

/// A parameterized stochastic policy `π_θ(a | s)`.
///
/// The `add_*` methods accumulate into caller-owned buffers so estimators can
/// sum per-step terms without allocating; the allocating forms are
/// conveniences on top.
pub trait Policy<T: Scalar>: Send + Sync {
    type State: Copy + Debug + PartialEq + Send + Sync;
    type Action: Copy + Debug + PartialEq + Send + Sync;

    /// Parameter dimension `d`.
    fn dim(&self) -> usize;

    fn log_prob(&self, params: &PolicyParams<T>, s: Self::State, a: Self::Action) -> Result<T>;

    /// `out += weight · ∇_θ log π_θ(a|s)`.
    fn add_score(
        &self,
        params: &PolicyParams<T>,
        s: Self::State,
        a: Self::Action,
        weight: T,
        out: &mut [T],
    ) -> Result<()>;

    /// `out += weight · ∇²_θ log π_θ(a|s) · v`.
    fn add_score_hvp(
        &self,
        params: &PolicyParams<T>,
        s: Self::State,
        a: Self::Action,
        v: &[T],
        weight: T,
        out: &mut [T],
    ) -> Result<()>;

    fn sample_action<R: Rng + ?Sized>(
        &self,
        params: &PolicyParams<T>,
        s: Self::State,
        rng: &mut R,
    ) -> Result<Self::Action>;

    fn bounds(&self) -> Result<PolicyBounds<T>>;

    fn score(&self, params: &PolicyParams<T>, s: Self::State, a: Self::Action) -> Result<Direction<T>> {
        let mut out = Direction::zeros(self.dim());
        self.add_score(params, s, a, T::one(), out.as_mut_slice())?;
        Ok(out)
    }

    /// `⟨∇ log π_θ(a|s), v⟩`.
    fn score_dot(&self, params: &PolicyParams<T>, s: Self::State, a: Self::Action, v: &[T]) -> Result<T> {
        self.score(params, s, a)?.dot(v)
    }

    fn score_hvp(
        &self,
        params: &PolicyParams<T>,
        s: Self::State,
        a: Self::Action,
        v: &Direction<T>,
    ) -> Result<Direction<T>> {
        let mut out = Direction::zeros(self.dim());
        self.add_score_hvp(params, s, a, v.as_slice(), T::one(), out.as_mut_slice())?;
        Ok(out)
    }
}

/// A policy over a finite state and action set, exposing its action
/// distribution for exact computations.
pub trait DiscretePolicy<T: Scalar>: Policy<T, State = usize, Action = usize> {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn action_probs(&self, params: &PolicyParams<T>, s: usize) -> Result<Vec<T>>;
}
