use super::agent::AgentDelta;
use super::config::FedConfig;
use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::vector::{Direction, PolicyParams};

/// Runs abort once `‖θ‖` exceeds this.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// The snapshot `(θ_r, θ_{r−1}, u_r)` broadcast to every agent in round `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerState<T> {
    pub theta: PolicyParams<T>,
    pub theta_prev: PolicyParams<T>,
    pub u: Direction<T>,
    pub round: usize,
}

impl<T: Scalar> ServerState<T> {
    /// Round 0 with `θ_{−1} = θ₀`.
    pub fn new(theta0: PolicyParams<T>, u0: Direction<T>) -> Result<Self> {
        check_dim("ServerState u0", theta0.dim(), u0.dim())?;
        theta0.ensure_finite("initial parameters")?;
        Ok(Self { theta_prev: theta0.clone(), theta: theta0, u: u0, round: 0 })
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }
}

/// `u_{r+1} = (ηNK)⁻¹ Σ_i Δ_i`, `θ_{r+1} = θ_r + λ_g u_{r+1}`.
///
/// Requires exactly one delta per agent `0..N`; deltas are summed in agent
/// order so the result does not depend on arrival order.
pub fn server_aggregate_and_step<T: Scalar>(
    deltas: &[AgentDelta<T>],
    server: &ServerState<T>,
    cfg: &FedConfig<T>,
) -> Result<ServerState<T>> {
    let n = cfg.n_agents;
    if deltas.len() != n {
        return Err(Error::Aggregation(format!("expected {n} deltas, got {}", deltas.len())));
    }
    let mut slots: Vec<Option<&AgentDelta<T>>> = vec![None; n];
    for d in deltas {
        match slots.get_mut(d.agent_id) {
            None => return Err(Error::Aggregation(format!("unknown agent {} (N = {n})", d.agent_id))),
            Some(Some(_)) => return Err(Error::Aggregation(format!("duplicate delta from agent {}", d.agent_id))),
            Some(slot) => *slot = Some(d),
        }
    }
    let scale = cfg.local_step * T::of_usize(n) * T::of_usize(cfg.local_steps);
    if !(scale > T::zero()) {
        return Err(Error::Aggregation(format!("aggregation scale ηNK = {scale} must be positive")));
    }
    let mut sum = Direction::zeros(server.dim());
    for d in slots.into_iter().flatten() {
        if !d.delta.is_finite() {
            return Err(Error::Aggregation(format!("non-finite delta from agent {}", d.agent_id)));
        }
        sum.axpy(T::one(), &d.delta)?;
    }
    let u_next = Direction::from_vec(sum.iter().map(|&x| x / scale).collect());
    let theta_next = server.theta.ascend(&u_next, cfg.global_step)?;
    let norm = theta_next.norm().as_f64();
    if !(norm <= DIVERGENCE_NORM) {
        return Err(Error::Diverged { round: server.round, norm });
    }
    Ok(ServerState { theta_prev: server.theta.clone(), theta: theta_next, u: u_next, round: server.round + 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::federation::FedAlgo;

    fn cfg(n: usize, k: usize, eta: f64, lambda: f64) -> FedConfig<f64> {
        FedConfig::new(FedAlgo::FedSvrpgM, n, k, 1, eta, lambda, 0.5)
    }

    fn delta(id: usize, v: Vec<f64>) -> AgentDelta<f64> {
        AgentDelta { agent_id: id, delta: Direction::from_vec(v) }
    }

    fn state() -> ServerState<f64> {
        ServerState::new(PolicyParams::from_vec(vec![0.5, -1.0]), Direction::from_vec(vec![3.0, 4.0])).unwrap()
    }

    #[test]
    fn zero_deltas_are_a_fixed_point() {
        let s = state();
        let next =
            server_aggregate_and_step(&[delta(0, vec![0.0; 2]), delta(1, vec![0.0; 2])], &s, &cfg(2, 3, 0.1, 1.0))
                .unwrap();
        assert_eq!(next.theta, s.theta);
        assert_eq!(next.u.as_slice(), &[0.0, 0.0]);
        assert_eq!(next.theta_prev, s.theta);
        assert_eq!(next.round, 1);
    }

    #[test]
    fn single_step_deltas_average_directions() {
        let eta = 0.25;
        let a = [vec![1.0, 2.0], vec![3.0, -2.0], vec![-1.0, 6.0]];
        let ds: Vec<_> = a.iter().enumerate().map(|(i, v)| delta(i, v.iter().map(|x| eta * x).collect())).collect();
        let next = server_aggregate_and_step(&ds, &state(), &cfg(3, 1, eta, 1.0)).unwrap();
        assert_eq!(next.u.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn opposite_deltas_cancel() {
        let (eta, k) = (0.1, 4);
        let x = [0.3, -0.7];
        let ds = vec![
            delta(1, x.iter().map(|v| -eta * k as f64 * v).collect()),
            delta(0, x.iter().map(|v| eta * k as f64 * v).collect()),
        ];
        let s = state();
        let next = server_aggregate_and_step(&ds, &s, &cfg(2, k, eta, 2.0)).unwrap();
        assert_eq!(next.u.as_slice(), &[0.0, 0.0]);
        assert_eq!(next.theta, s.theta);
    }

    #[test]
    fn aggregation_identity() {
        let (eta, lambda) = (0.05, 0.7);
        let ds = vec![delta(0, vec![0.01, -0.02]), delta(1, vec![0.03, 0.005])];
        let s = state();
        let next = server_aggregate_and_step(&ds, &s, &cfg(2, 3, eta, lambda)).unwrap();
        for j in 0..2 {
            let expect = lambda / (eta * 6.0) * (ds[0].delta[j] + ds[1].delta[j]);
            assert!((next.theta[j] - s.theta[j] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn barrier_errors() {
        let s = state();
        let c = cfg(2, 1, 0.1, 1.0);
        assert!(server_aggregate_and_step(&[delta(0, vec![0.0; 2])], &s, &c).is_err());
        assert!(server_aggregate_and_step(&[delta(0, vec![0.0; 2]), delta(0, vec![0.0; 2])], &s, &c).is_err());
        assert!(server_aggregate_and_step(&[delta(0, vec![0.0; 2]), delta(2, vec![0.0; 2])], &s, &c).is_err());
        let zero_eta = FedConfig { local_step: 0.0, ..c.clone() };
        assert!(server_aggregate_and_step(&[delta(0, vec![0.0; 2]), delta(1, vec![0.0; 2])], &s, &zero_eta).is_err());
        let nan = [delta(0, vec![f64::NAN, 0.0]), delta(1, vec![0.0; 2])];
        assert!(server_aggregate_and_step(&nan, &s, &c).is_err());
    }

    #[test]
    fn divergence_guard() {
        let ds = [delta(0, vec![1e7, 0.0])];
        let err = server_aggregate_and_step(&ds, &state(), &cfg(1, 1, 1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Diverged { round: 0, .. }));
    }
}
