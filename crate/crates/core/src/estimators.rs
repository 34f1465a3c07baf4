//! Stochastic gradient machinery: GPOMDP, trajectory importance weights, the
//! momentum variance-reduced direction, the Hessian-aided correction and the
//! warm-start batch for `u₀`.

use rand::Rng;

use crate::envs::{sample_trajectory, Environment, Trajectory};
use crate::error::{check_dim, Error, Result};
use crate::policies::Policy;
use crate::rng::stream;
use crate::scalar::Scalar;
use crate::vector::{Direction, PolicyParams};

/// Momentum settings shared by both momentum algorithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumConfig<T> {
    /// β ∈ (0, 1]; β = 1 recovers plain stochastic policy gradient.
    pub beta: T,
    /// Optional cap applied to importance weights.
    pub clip_is: Option<T>,
}

impl<T: Scalar> MomentumConfig<T> {
    pub fn new(beta: T) -> Result<Self> {
        let cfg = Self { beta, clip_is: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > T::zero() && self.beta <= T::one()) {
            return Err(Error::Construction(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if let Some(c) = self.clip_is {
            if !(c > T::zero()) {
                return Err(Error::Construction(format!("IS cap must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// Discounted reward-to-go `c_t = Σ_{h≥t} γ^h r_h` for every step.
fn reward_to_go<S, A, T: Scalar>(traj: &Trajectory<S, A, T>, gamma: T) -> Vec<T> {
    let n = traj.len();
    let mut disc = Vec::with_capacity(n);
    let mut g = T::one();
    for step in &traj.steps {
        disc.push(g * step.reward);
        g = g * gamma;
    }
    let mut acc = T::zero();
    for c in disc.iter_mut().rev() {
        acc = acc + *c;
        *c = acc;
    }
    disc
}

/// GPOMDP estimate `g(τ|θ) = Σ_t (Σ_{h≥t} γ^h r_h) ∇log π_θ(a_t|s_t)`.
pub fn gpomdp_grad<T, P>(
    traj: &Trajectory<P::State, P::Action, T>,
    params: &PolicyParams<T>,
    policy: &P,
    gamma: T,
) -> Result<Direction<T>>
where
    T: Scalar,
    P: Policy<T>,
{
    check_dim("gpomdp_grad", policy.dim(), params.dim())?;
    let weights = reward_to_go(traj, gamma);
    let mut out = Direction::zeros(policy.dim());
    for (step, &c) in traj.steps.iter().zip(&weights) {
        if c != T::zero() {
            policy.add_score(params, step.state, step.action, c, out.as_mut_slice())?;
        }
    }
    Ok(out)
}

/// Sum of per-step log-likelihood ratios `Σ_h log π_target(a_h|s_h) − log π_behavior(a_h|s_h)`.
pub fn log_is_weight<T, P>(
    traj: &Trajectory<P::State, P::Action, T>,
    target: &PolicyParams<T>,
    behavior: &PolicyParams<T>,
    policy: &P,
) -> Result<T>
where
    T: Scalar,
    P: Policy<T>,
{
    let mut total = T::zero();
    for step in &traj.steps {
        total = total + policy.log_prob(target, step.state, step.action)?
            - policy.log_prob(behavior, step.state, step.action)?;
    }
    if total.is_nan() || total == T::infinity() {
        return Err(Error::NonFinite(format!("importance log-weight {total}")));
    }
    Ok(total)
}

/// Trajectory importance weight `w(τ | θ', θ) = p(τ|θ') / p(τ|θ)` for a
/// trajectory drawn under `behavior = θ`. Transition probabilities cancel,
/// leaving the product of policy ratios, accumulated in log space.
pub fn is_weight<T, P>(
    traj: &Trajectory<P::State, P::Action, T>,
    target: &PolicyParams<T>,
    behavior: &PolicyParams<T>,
    policy: &P,
    clip: Option<T>,
) -> Result<T>
where
    T: Scalar,
    P: Policy<T>,
{
    if target == behavior {
        return Ok(T::one());
    }
    let w = log_is_weight(traj, target, behavior, policy)?.exp();
    if !w.is_finite() {
        return Err(Error::NonFinite(format!("importance weight {w}")));
    }
    Ok(match clip {
        Some(cap) => w.min(cap),
        None => w,
    })
}

/// Momentum variance-reduced direction
/// `u = β g_cur + (1 − β)[u_r + g_cur − w g_anchor]`,
/// where `g_cur` and `g_anchor` are GPOMDP estimates on the same trajectory at
/// the local and the previous global parameters.
pub fn svrpg_m_direction<T: Scalar>(
    g_cur: &Direction<T>,
    g_anchor: &Direction<T>,
    w: T,
    u_r: &Direction<T>,
    beta: T,
) -> Result<Direction<T>> {
    let d = g_cur.dim();
    check_dim("svrpg_m_direction anchor", d, g_anchor.dim())?;
    check_dim("svrpg_m_direction u_r", d, u_r.dim())?;
    if beta == T::one() {
        return Ok(g_cur.clone());
    }
    let keep = T::one() - beta;
    Ok(Direction::from_vec((0..d).map(|j| beta * g_cur[j] + keep * (u_r[j] + g_cur[j] - w * g_anchor[j])).collect()))
}

/// Hessian-aided correction evaluated at the mixed parameters `θ(α)`:
///
/// `Λ = ⟨∇log p(τ|θ(α)), v⟩ · g(τ|θ(α)) + Σ_h c_h ∇²log π(a_h|s_h) v`,
///
/// with `c_h = Σ_{i≥h} γ^i r_i`. Its expectation over `τ ~ p(·|θ(α))` is
/// `∇²J(θ(α)) v`.
pub fn hapg_lambda<T, P>(
    traj: &Trajectory<P::State, P::Action, T>,
    params_mixed: &PolicyParams<T>,
    v: &Direction<T>,
    policy: &P,
    gamma: T,
) -> Result<Direction<T>>
where
    T: Scalar,
    P: Policy<T>,
{
    let d = policy.dim();
    check_dim("hapg_lambda params", d, params_mixed.dim())?;
    check_dim("hapg_lambda v", d, v.dim())?;
    let weights = reward_to_go(traj, gamma);
    let mut g = Direction::zeros(d);
    let mut out = Direction::zeros(d);
    let mut log_p_dot_v = T::zero();
    for (step, &c) in traj.steps.iter().zip(&weights) {
        log_p_dot_v = log_p_dot_v + policy.score_dot(params_mixed, step.state, step.action, v.as_slice())?;
        if c != T::zero() {
            policy.add_score(params_mixed, step.state, step.action, c, g.as_mut_slice())?;
            policy.add_score_hvp(params_mixed, step.state, step.action, v.as_slice(), c, out.as_mut_slice())?;
        }
    }
    out.axpy(log_p_dot_v, &g)?;
    Ok(out)
}

/// Hessian-aided momentum direction `u = β w g_cur + (1 − β)[u_r + Λ]`.
pub fn hapg_direction<T: Scalar>(
    w: T,
    g_cur: &Direction<T>,
    u_r: &Direction<T>,
    lambda_term: &Direction<T>,
    beta: T,
) -> Result<Direction<T>> {
    let d = g_cur.dim();
    check_dim("hapg_direction u_r", d, u_r.dim())?;
    check_dim("hapg_direction lambda", d, lambda_term.dim())?;
    if beta == T::one() {
        return Ok(g_cur.scaled(w));
    }
    let keep = T::one() - beta;
    Ok(Direction::from_vec((0..d).map(|j| beta * w * g_cur[j] + keep * (u_r[j] + lambda_term[j])).collect()))
}

/// Warm-start batch size `B = ⌈K / (R β²)⌉`.
pub fn warm_start_batch(local_steps: usize, rounds: usize, beta: f64) -> Result<usize> {
    if local_steps == 0 || rounds == 0 {
        return Err(Error::Construction("K and R must be at least 1".into()));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Construction(format!("beta must lie in (0, 1], got {beta}")));
    }
    let raw = local_steps as f64 / (rounds as f64 * beta * beta);
    // Guard against 32/0.4 landing a hair above 80 in binary.
    let nearest = raw.round();
    let b = if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { raw.ceil() };
    Ok((b as usize).max(1))
}

/// Average GPOMDP gradient at `θ₀` over `B` trajectories per agent.
pub fn batch_gradient<T, E, P>(
    envs: &[E],
    policy: &P,
    theta: &PolicyParams<T>,
    batch: usize,
    seed: u64,
    tag: &str,
) -> Result<Direction<T>>
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
{
    if envs.is_empty() || batch == 0 {
        return Err(Error::Construction("need at least one agent and one trajectory".into()));
    }
    let mut total = Direction::zeros(policy.dim());
    for (i, env) in envs.iter().enumerate() {
        let mut rng = stream(seed, tag, &[i as u64]);
        for _ in 0..batch {
            let tau = sample_trajectory(env, policy, theta, i, &mut rng)?;
            total.axpy(T::one(), &gpomdp_grad(&tau, theta, policy, env.gamma())?)?;
        }
    }
    Ok(total.scaled(T::one() / T::of_usize(envs.len() * batch)))
}

/// Warm start `u₀ = (1/NB) Σ_i Σ_b g_i(τ_b^{(i)} | θ₀)` with `B = ⌈K/(Rβ²)⌉`.
/// Agent `i` samples from the stream `derive(seed, "u0", i)`.
#[allow(clippy::too_many_arguments)]
pub fn init_u0<T, E, P>(
    envs: &[E],
    policy: &P,
    theta0: &PolicyParams<T>,
    local_steps: usize,
    rounds: usize,
    beta: f64,
    seed: u64,
) -> Result<Direction<T>>
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
{
    let batch = warm_start_batch(local_steps, rounds, beta)?;
    batch_gradient(envs, policy, theta0, batch, seed, "u0")
}

/// Draw `α ~ U[0, 1]`.
pub fn draw_alpha<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::of(rng.random::<f64>())
}
