use rand::Rng;

use super::Environment;
use crate::error::{check_dim, Result};
use crate::policies::Policy;
use crate::scalar::Scalar;
use crate::vector::PolicyParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<S, A, T> {
    pub state: S,
    pub action: A,
    pub reward: T,
}

/// Fixed-horizon rollout `(s_0, a_0, r_0), …, (s_{H-1}, a_{H-1}, r_{H-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S, A, T> {
    pub steps: Vec<Step<S, A, T>>,
    /// Index of the agent whose environment produced the rollout.
    pub env_id: usize,
}

impl<S, A, T> Trajectory<S, A, T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Roll out one episode of exactly `H` steps: `s_0 ~ ρ`, `a_h ~ π_θ(·|s_h)`,
/// `s_{h+1} ~ P(·|s_h, a_h)`.
pub fn sample_trajectory<T, E, P, R>(
    env: &E,
    policy: &P,
    params: &PolicyParams<T>,
    env_id: usize,
    rng: &mut R,
) -> Result<Trajectory<E::State, E::Action, T>>
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
    R: Rng + ?Sized,
{
    check_dim("sample_trajectory", policy.dim(), params.dim())?;
    let horizon = env.horizon();
    let mut steps = Vec::with_capacity(horizon);
    let mut s = env.sample_initial(rng);
    for h in 0..horizon {
        let a = policy.sample_action(params, s, rng)?;
        steps.push(Step { state: s, action: a, reward: env.reward(s, a) });
        if h + 1 < horizon {
            s = env.sample_next(s, a, rng);
        }
    }
    Ok(Trajectory { steps, env_id })
}

/// `Σ_h γ^h r_h`.
pub fn discounted_return<S, A, T: Scalar>(traj: &Trajectory<S, A, T>, gamma: T) -> T {
    let mut disc = T::one();
    let mut total = T::zero();
    for step in &traj.steps {
        total = total + disc * step.reward;
        disc = disc * gamma;
    }
    total
}
