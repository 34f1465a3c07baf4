use crate::envs::{Environment, Step, TabularMdp, Trajectory};
use crate::error::{check_dim, Error, Result};
use crate::policies::DiscretePolicy;
use crate::scalar::Scalar;
use crate::vector::PolicyParams;

/// Maximum `|S|^(H+1) · |A|^H` accepted by the enumerators.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

/// `|S|^(H+1) · |A|^H`, saturating.
pub fn enumeration_size(n_states: usize, n_actions: usize, horizon: usize) -> u128 {
    let s = n_states as u128;
    let a = n_actions as u128;
    let mut total: u128 = s;
    for _ in 0..horizon {
        total = total.saturating_mul(s).saturating_mul(a);
    }
    total
}

/// Visit every length-`H` trajectory with its probability
/// `ρ(s_0) Π_h π_θ(a_h|s_h) P(s_{h+1}|s_h,a_h)`. The terminal state `s_H` is
/// marginalized out (kernel rows sum to one). Zero-probability prefixes are
/// skipped. Returns the total probability visited.
pub fn enumerate_trajectories<T, P, F>(
    mdp: &TabularMdp<T>,
    policy: &P,
    params: &PolicyParams<T>,
    mut visit: F,
) -> Result<T>
where
    T: Scalar,
    P: DiscretePolicy<T>,
    F: FnMut(&Trajectory<usize, usize, T>, T) -> Result<()>,
{
    check_dim("enumeration: parameters", policy.dim(), params.dim())?;
    check_dim("enumeration: actions", mdp.n_actions(), policy.n_actions())?;
    let needed = enumeration_size(mdp.n_states(), mdp.n_actions(), mdp.horizon());
    if needed > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { needed, budget: ENUMERATION_BUDGET });
    }
    let pi: Vec<Vec<T>> = (0..mdp.n_states()).map(|s| policy.action_probs(params, s)).collect::<Result<_>>()?;
    let mut traj = Trajectory { steps: Vec::with_capacity(mdp.horizon()), env_id: 0 };
    let mut total = T::zero();
    for (s0, &p0) in mdp.init_dist().iter().enumerate() {
        if p0 > T::zero() {
            recurse(mdp, &pi, s0, p0, &mut traj, &mut total, &mut visit)?;
        }
    }
    Ok(total)
}

fn recurse<T, F>(
    mdp: &TabularMdp<T>,
    pi: &[Vec<T>],
    s: usize,
    prob: T,
    traj: &mut Trajectory<usize, usize, T>,
    total: &mut T,
    visit: &mut F,
) -> Result<()>
where
    T: Scalar,
    F: FnMut(&Trajectory<usize, usize, T>, T) -> Result<()>,
{
    let last = traj.steps.len() + 1 == mdp.horizon();
    for (a, &pa) in pi[s].iter().enumerate() {
        let p_sa = prob * pa;
        if p_sa == T::zero() {
            continue;
        }
        traj.steps.push(Step { state: s, action: a, reward: mdp.reward(s, a) });
        if last {
            visit(traj, p_sa)?;
            *total = *total + p_sa;
        } else {
            for (s_next, &pn) in mdp.transition_row(s, a).iter().enumerate() {
                if pn > T::zero() {
                    recurse(mdp, pi, s_next, p_sa * pn, traj, total, visit)?;
                }
            }
        }
        traj.steps.pop();
    }
    Ok(())
}

/// `Σ_τ p(τ|θ) f(τ)` for a vector-valued functional.
pub fn enumerate_expectation<T, P, F>(
    mdp: &TabularMdp<T>,
    policy: &P,
    params: &PolicyParams<T>,
    mut f: F,
) -> Result<Vec<T>>
where
    T: Scalar,
    P: DiscretePolicy<T>,
    F: FnMut(&Trajectory<usize, usize, T>) -> Result<Vec<T>>,
{
    let mut acc: Option<Vec<T>> = None;
    enumerate_trajectories(mdp, policy, params, |tau, p| {
        let val = f(tau)?;
        match acc.as_mut() {
            None => acc = Some(val.into_iter().map(|x| p * x).collect()),
            Some(sum) => {
                check_dim("enumerate_expectation: functional output", sum.len(), val.len())?;
                for (s, x) in sum.iter_mut().zip(val) {
                    *s = *s + p * x;
                }
            }
        }
        Ok(())
    })?;
    acc.ok_or_else(|| Error::Unsupported("no trajectory has positive probability".into()))
}

/// `Σ_τ p(τ|θ) f(τ)` for a scalar functional.
pub fn enumerate_scalar<T, P, F>(mdp: &TabularMdp<T>, policy: &P, params: &PolicyParams<T>, mut f: F) -> Result<T>
where
    T: Scalar,
    P: DiscretePolicy<T>,
    F: FnMut(&Trajectory<usize, usize, T>) -> Result<T>,
{
    let mut acc = T::zero();
    enumerate_trajectories(mdp, policy, params, |tau, p| {
        acc = acc + p * f(tau)?;
        Ok(())
    })?;
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{discounted_return, gen_random_mdp};
    use crate::oracle::exact_value;
    use crate::policies::SoftmaxPolicy;

    #[test]
    fn probabilities_sum_to_one() {
        let mdp = gen_random_mdp::<f64>(1, 3, 2, 3, 0.9, 1.0).unwrap();
        let pol = SoftmaxPolicy::for_mdp(&mdp);
        let theta = PolicyParams::from_vec(vec![0.2, -0.5, 1.0, 0.0, 0.3, 0.3]);
        let total = enumerate_scalar(&mdp, &pol, &theta, |_| Ok(1.0)).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn return_expectation_is_exact_value() {
        let mdp = gen_random_mdp::<f64>(2, 2, 2, 3, 0.9, 1.0).unwrap();
        let pol = SoftmaxPolicy::for_mdp(&mdp);
        let theta = PolicyParams::from_vec(vec![0.2, -0.5, 1.0, 0.0]);
        let by_enum = enumerate_scalar(&mdp, &pol, &theta, |tau| Ok(discounted_return(tau, 0.9))).unwrap();
        assert!((by_enum - exact_value(&mdp, &pol, &theta).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(enumeration_size(2, 2, 2), 32);
        let mdp = gen_random_mdp::<f64>(2, 5, 5, 6, 0.9, 1.0).unwrap();
        let pol = SoftmaxPolicy::for_mdp(&mdp);
        let err = enumerate_scalar(&mdp, &pol, &PolicyParams::zeros(25), |_| Ok(1.0)).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }
}
