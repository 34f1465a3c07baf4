use crate::envs::{Environment, TabularMdp};
use crate::error::{check_dim, Error, Result};
use crate::policies::DiscretePolicy;
use crate::scalar::Scalar;
use crate::vector::{Direction, PolicyParams};

fn check_shapes<T: Scalar, P: DiscretePolicy<T>>(
    mdp: &TabularMdp<T>,
    policy: &P,
    params: &PolicyParams<T>,
) -> Result<()> {
    check_dim("oracle: states", mdp.n_states(), policy.n_states())?;
    check_dim("oracle: actions", mdp.n_actions(), policy.n_actions())?;
    check_dim("oracle: parameters", policy.dim(), params.dim())
}

fn policy_table<T: Scalar, P: DiscretePolicy<T>>(
    policy: &P,
    params: &PolicyParams<T>,
    n_states: usize,
) -> Result<Vec<Vec<T>>> {
    (0..n_states).map(|s| policy.action_probs(params, s)).collect()
}

/// State distributions `d_0 = ρ, …, d_{H−1}` under `π_θ`.
fn state_distributions<T: Scalar>(mdp: &TabularMdp<T>, pi: &[Vec<T>]) -> Vec<Vec<T>> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut out = Vec::with_capacity(mdp.horizon());
    let mut d = mdp.init_dist().to_vec();
    for h in 0..mdp.horizon() {
        if h + 1 < mdp.horizon() {
            let mut next = vec![T::zero(); ns];
            for s in 0..ns {
                if d[s] == T::zero() {
                    continue;
                }
                for (a, &q) in pi[s].iter().enumerate().take(na) {
                    let mass = d[s] * q;
                    for (n, &p) in next.iter_mut().zip(mdp.transition_row(s, a)) {
                        *n = *n + mass * p;
                    }
                }
            }
            out.push(std::mem::replace(&mut d, next));
        } else {
            out.push(std::mem::take(&mut d));
        }
    }
    out
}

/// Exact `J(θ) = Σ_{h<H} γ^h Σ_{s,a} d_h(s) π_θ(a|s) R(s,a)` by forward
/// propagation of the state distribution.
pub fn exact_value<T: Scalar, P: DiscretePolicy<T>>(
    mdp: &TabularMdp<T>,
    policy: &P,
    params: &PolicyParams<T>,
) -> Result<T> {
    check_shapes(mdp, policy, params)?;
    let pi = policy_table(policy, params, mdp.n_states())?;
    let mut disc = T::one();
    let mut total = T::zero();
    for d in state_distributions(mdp, &pi) {
        let mut stage = T::zero();
        for (s, &ds) in d.iter().enumerate() {
            for (a, &p) in pi[s].iter().enumerate() {
                stage = stage + ds * p * mdp.reward(s, a);
            }
        }
        total = total + disc * stage;
        disc = disc * mdp.gamma();
    }
    Ok(total)
}

/// Exact finite-horizon policy gradient
/// `∇J = Σ_t γ^t Σ_{s,a} d_t(s) π(a|s) Q_t(s,a) ∇log π(a|s)`
/// with `Q_t(s,a) = R(s,a) + γ Σ_{s'} P(s'|s,a) V_{t+1}(s')`.
pub fn exact_gradient<T: Scalar, P: DiscretePolicy<T>>(
    mdp: &TabularMdp<T>,
    policy: &P,
    params: &PolicyParams<T>,
) -> Result<Direction<T>> {
    check_shapes(mdp, policy, params)?;
    let (ns, na, horizon) = (mdp.n_states(), mdp.n_actions(), mdp.horizon());
    let pi = policy_table(policy, params, ns)?;
    let dists = state_distributions(mdp, &pi);
    let gamma = mdp.gamma();

    // Backward pass for Q_t, t = H−1 … 0.
    let mut q = vec![vec![T::zero(); ns * na]; horizon];
    let mut v_next = vec![T::zero(); ns];
    for t in (0..horizon).rev() {
        let mut v = vec![T::zero(); ns];
        for s in 0..ns {
            for a in 0..na {
                let cont: T = if t + 1 < horizon {
                    mdp.transition_row(s, a).iter().zip(&v_next).map(|(&p, &vn)| p * vn).sum()
                } else {
                    T::zero()
                };
                let qsa = mdp.reward(s, a) + gamma * cont;
                q[t][s * na + a] = qsa;
                v[s] = v[s] + pi[s][a] * qsa;
            }
        }
        v_next = v;
    }

    let mut grad = Direction::zeros(policy.dim());
    let mut disc = T::one();
    for t in 0..horizon {
        for s in 0..ns {
            let ds = dists[t][s];
            if ds == T::zero() {
                continue;
            }
            for a in 0..na {
                let w = disc * ds * pi[s][a] * q[t][s * na + a];
                if w != T::zero() {
                    policy.add_score(params, s, a, w, grad.as_mut_slice())?;
                }
            }
        }
        disc = disc * gamma;
    }
    Ok(grad)
}

/// Fleet-level objective at one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetObjective<T> {
    /// `J(θ) = (1/N) Σ J_i(θ)`.
    pub value: T,
    /// `∇J(θ)`.
    pub gradient: Direction<T>,
    /// `‖∇J(θ)‖²`.
    pub grad_norm_sq: T,
    /// `(1/N) Σ ‖∇J_i(θ)‖²`; equals `G₀` when evaluated at `θ₀`.
    pub mean_agent_grad_norm_sq: T,
}

pub fn fleet_objective<T: Scalar, P: DiscretePolicy<T>>(
    envs: &[TabularMdp<T>],
    policy: &P,
    params: &PolicyParams<T>,
) -> Result<FleetObjective<T>> {
    if envs.is_empty() {
        return Err(Error::Unsupported("objective of an empty fleet".into()));
    }
    let n = T::of_usize(envs.len());
    let mut value = T::zero();
    let mut gradient = Direction::zeros(policy.dim());
    let mut agent_sq = T::zero();
    for env in envs {
        value = value + exact_value(env, policy, params)?;
        let g = exact_gradient(env, policy, params)?;
        agent_sq = agent_sq + g.norm_sq();
        gradient.axpy(T::one(), &g)?;
    }
    let gradient = gradient.scaled(T::one() / n);
    Ok(FleetObjective {
        value: value / n,
        grad_norm_sq: gradient.norm_sq(),
        gradient,
        mean_agent_grad_norm_sq: agent_sq / n,
    })
}
