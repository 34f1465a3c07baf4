use rand::Rng;

use super::config::{FedAlgo, FedConfig};
use super::server::ServerState;
use crate::envs::{sample_trajectory, Environment};
use crate::error::{Error, Result};
use crate::estimators::{draw_alpha, gpomdp_grad, hapg_direction, hapg_lambda, is_weight, svrpg_m_direction};
use crate::policies::Policy;
use crate::scalar::Scalar;
use crate::vector::{Direction, PolicyParams};

/// One agent's upload `Δ = θ_{r,K} − θ_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentDelta<T> {
    pub agent_id: usize,
    pub delta: Direction<T>,
}

/// Per-step local direction given the current local parameters.
trait LocalRule<T: Scalar, E: Environment<T>, P> {
    fn direction<R: Rng + ?Sized>(
        &self,
        env: &E,
        policy: &P,
        server: &ServerState<T>,
        theta_k: &PolicyParams<T>,
        agent_id: usize,
        rng: &mut R,
    ) -> Result<Direction<T>>;
}

struct Pavg;

struct Svrpg<T> {
    beta: T,
    clip: Option<T>,
}

struct Hapg<T> {
    beta: T,
    clip: Option<T>,
}

impl<T, E, P> LocalRule<T, E, P> for Pavg
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
{
    fn direction<R: Rng + ?Sized>(
        &self,
        env: &E,
        policy: &P,
        _server: &ServerState<T>,
        theta_k: &PolicyParams<T>,
        agent_id: usize,
        rng: &mut R,
    ) -> Result<Direction<T>> {
        let tau = sample_trajectory(env, policy, theta_k, agent_id, rng)?;
        gpomdp_grad(&tau, theta_k, policy, env.gamma())
    }
}

impl<T, E, P> LocalRule<T, E, P> for Svrpg<T>
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
{
    fn direction<R: Rng + ?Sized>(
        &self,
        env: &E,
        policy: &P,
        server: &ServerState<T>,
        theta_k: &PolicyParams<T>,
        agent_id: usize,
        rng: &mut R,
    ) -> Result<Direction<T>> {
        let tau = sample_trajectory(env, policy, theta_k, agent_id, rng)?;
        let g_cur = gpomdp_grad(&tau, theta_k, policy, env.gamma())?;
        // The anchor correction carries weight 1 − β; at β = 1 it is skipped,
        // which also keeps an overflowing weight from aborting a plain step.
        if self.beta == T::one() {
            return Ok(g_cur);
        }
        let g_anchor = gpomdp_grad(&tau, &server.theta_prev, policy, env.gamma())?;
        let w = is_weight(&tau, &server.theta_prev, theta_k, policy, self.clip)?;
        svrpg_m_direction(&g_cur, &g_anchor, w, &server.u, self.beta)
    }
}

impl<T, E, P> LocalRule<T, E, P> for Hapg<T>
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
{
    fn direction<R: Rng + ?Sized>(
        &self,
        env: &E,
        policy: &P,
        server: &ServerState<T>,
        theta_k: &PolicyParams<T>,
        agent_id: usize,
        rng: &mut R,
    ) -> Result<Direction<T>> {
        let alpha: T = draw_alpha(rng);
        let mixed = theta_k.mix_toward(&server.theta_prev, alpha)?;
        let tau = sample_trajectory(env, policy, &mixed, agent_id, rng)?;
        let g_cur = gpomdp_grad(&tau, theta_k, policy, env.gamma())?;
        let w = is_weight(&tau, theta_k, &mixed, policy, self.clip)?;
        if self.beta == T::one() {
            return Ok(g_cur.scaled(w));
        }
        let v = theta_k.delta_from(&server.theta_prev)?;
        let lambda = hapg_lambda(&tau, &mixed, &v, policy, env.gamma())?;
        hapg_direction(w, &g_cur, &server.u, &lambda, self.beta)
    }
}

fn local_loop<T, E, P, L, R>(
    rule: &L,
    env: &E,
    policy: &P,
    server: &ServerState<T>,
    cfg: &FedConfig<T>,
    agent_id: usize,
    rng: &mut R,
) -> Result<AgentDelta<T>>
where
    T: Scalar,
    E: Environment<T>,
    L: LocalRule<T, E, P>,
    R: Rng + ?Sized,
{
    let fail = |step: usize, reason: String| Error::Agent { round: server.round, step, agent: agent_id, reason };
    // Δ is accumulated directly as η Σ_k u_k and the local iterate is formed
    // as θ_r + Δ; this equals θ_{r,K} − θ_r without the cancellation error of
    // subtracting two nearby parameter vectors.
    let mut delta = Direction::zeros(server.dim());
    let mut theta_k = server.theta.clone();
    for k in 0..cfg.local_steps {
        let u = rule.direction(env, policy, server, &theta_k, agent_id, rng).map_err(|e| fail(k, e.to_string()))?;
        delta.axpy(cfg.local_step, &u).map_err(|e| fail(k, e.to_string()))?;
        theta_k = server.theta.ascend(&delta, T::one()).map_err(|e| fail(k, e.to_string()))?;
        if !theta_k.is_finite() {
            return Err(fail(k, "local parameters became non-finite".into()));
        }
    }
    Ok(AgentDelta { agent_id, delta })
}

/// FedSVRPG-M agent round: `K` steps along the momentum direction, each on a
/// fresh trajectory from the current local parameters, with the anchor
/// gradient at `θ_{r−1}` evaluated on that same trajectory.
pub fn local_round_svrpg<T, E, P, R>(
    env: &E,
    policy: &P,
    server: &ServerState<T>,
    cfg: &FedConfig<T>,
    agent_id: usize,
    rng: &mut R,
) -> Result<AgentDelta<T>>
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
    R: Rng + ?Sized,
{
    let rule = Svrpg { beta: cfg.beta, clip: cfg.clip_is };
    local_loop(&rule, env, policy, server, cfg, agent_id, rng)
}

/// FedHAPG-M agent round: each step draws `α ~ U[0,1]`, samples from the
/// mixed parameters `αθ_{r−1} + (1−α)θ_{r,k}` and corrects with the
/// Hessian-aided term.
pub fn local_round_hapg<T, E, P, R>(
    env: &E,
    policy: &P,
    server: &ServerState<T>,
    cfg: &FedConfig<T>,
    agent_id: usize,
    rng: &mut R,
) -> Result<AgentDelta<T>>
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
    R: Rng + ?Sized,
{
    let rule = Hapg { beta: cfg.beta, clip: cfg.clip_is };
    local_loop(&rule, env, policy, server, cfg, agent_id, rng)
}

/// Baseline agent round: `K` plain GPOMDP ascent steps.
pub fn local_round_pavg<T, E, P, R>(
    env: &E,
    policy: &P,
    server: &ServerState<T>,
    cfg: &FedConfig<T>,
    agent_id: usize,
    rng: &mut R,
) -> Result<AgentDelta<T>>
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
    R: Rng + ?Sized,
{
    local_loop(&Pavg, env, policy, server, cfg, agent_id, rng)
}

/// Dispatch on `cfg.algo`.
pub fn local_round<T, E, P, R>(
    env: &E,
    policy: &P,
    server: &ServerState<T>,
    cfg: &FedConfig<T>,
    agent_id: usize,
    rng: &mut R,
) -> Result<AgentDelta<T>>
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
    R: Rng + ?Sized,
{
    match cfg.algo {
        FedAlgo::FedSvrpgM => local_round_svrpg(env, policy, server, cfg, agent_id, rng),
        FedAlgo::FedHapgM => local_round_hapg(env, policy, server, cfg, agent_id, rng),
        FedAlgo::Pavg => local_round_pavg(env, policy, server, cfg, agent_id, rng),
    }
}
