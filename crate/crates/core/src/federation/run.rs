use std::time::Instant;

use rayon::prelude::*;

use super::agent::{local_round, AgentDelta};
use super::config::{FedConfig, U0Init};
use super::eval::{Evaluation, Evaluator};
use super::server::{server_aggregate_and_step, ServerState};
use crate::envs::Environment;
use crate::error::{check_dim, Error, Result};
use crate::estimators::init_u0;
use crate::policies::Policy;
use crate::rng::stream;
use crate::scalar::Scalar;
use crate::vector::{Direction, PolicyParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub round: usize,
    pub value: f64,
    pub grad_norm_sq: f64,
    /// Standard error of `value` (zero under exact evaluation).
    pub value_stderr: f64,
    /// Milliseconds since the start of the run.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub final_value: f64,
    pub min_grad_norm_sq: f64,
    /// First evaluated round with `‖∇J‖² ≤ ε`, when a threshold was given.
    pub rounds_to_eps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog<T> {
    pub rows: Vec<LogRow>,
    pub summary: RunSummary,
    /// `(1/N) Σ ‖∇J_i(θ₀)‖²`.
    pub g0: f64,
    /// `R_max(1 − γ^H)/(1 − γ) − J(θ₀)`.
    pub delta: f64,
    pub final_theta: PolicyParams<T>,
}

impl<T> RunLog<T> {
    /// Rows with the timing column zeroed, for determinism comparisons.
    pub fn rows_without_timing(&self) -> Vec<LogRow> {
        self.rows.iter().map(|r| LogRow { wall_ms: 0.0, ..*r }).collect()
    }
}

fn summarize(rows: &[LogRow], eps: Option<f64>) -> RunSummary {
    let last = rows.last().expect("run log always holds the round-0 row");
    RunSummary {
        final_value: last.value,
        min_grad_norm_sq: rows.iter().map(|r| r.grad_norm_sq).fold(f64::INFINITY, f64::min),
        rounds_to_eps: eps.and_then(|e| rows.iter().find(|r| r.grad_norm_sq <= e).map(|r| r.round)),
    }
}

fn row(round: usize, eval: Evaluation, start: Instant) -> Result<LogRow> {
    if !(eval.value.is_finite() && eval.grad_norm_sq.is_finite()) {
        return Err(Error::NonFinite(format!("evaluation at round {round}")));
    }
    Ok(LogRow {
        round,
        value: eval.value,
        grad_norm_sq: eval.grad_norm_sq,
        value_stderr: eval.value_stderr,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Run `R` synchronous rounds from `θ₀`.
///
/// Agent `i` in round `r` draws from its own stream derived from
/// `(master_seed, r, i)`, so the log is bit-identical whether agents run
/// serially or on the rayon pool. Rounds `0`, every `eval_every`-th and `R`
/// are evaluated.
pub fn run_rounds<T, E, P, V>(
    envs: &[E],
    policy: &P,
    theta0: &PolicyParams<T>,
    cfg: &FedConfig<T>,
    evaluator: &V,
) -> Result<RunLog<T>>
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
    V: Evaluator<T> + ?Sized,
{
    cfg.validate()?;
    check_dim("run_rounds: agents", cfg.n_agents, envs.len())?;
    check_dim("run_rounds: parameters", policy.dim(), theta0.dim())?;
    let start = Instant::now();

    let u0 = match cfg.u0_init {
        U0Init::Warm => {
            init_u0(envs, policy, theta0, cfg.local_steps, cfg.rounds.max(1), cfg.beta.as_f64(), cfg.master_seed)?
        }
        U0Init::Zero => Direction::zeros(policy.dim()),
    };
    let mut server = ServerState::new(theta0.clone(), u0)?;

    let first = evaluator.evaluate(theta0)?;
    let g0 = first.mean_agent_grad_norm_sq;
    let delta = envs[0].return_bound().as_f64() - first.value;
    let mut rows = vec![row(0, first, start)?];

    for r in 0..cfg.rounds {
        let agent = |i: usize| -> Result<AgentDelta<T>> {
            let mut rng = stream(cfg.master_seed, "agent", &[r as u64, i as u64]);
            local_round(&envs[i], policy, &server, cfg, i, &mut rng)
        };
        let deltas: Vec<AgentDelta<T>> = if cfg.parallel {
            (0..cfg.n_agents).into_par_iter().map(agent).collect::<Result<_>>()?
        } else {
            (0..cfg.n_agents).map(agent).collect::<Result<_>>()?
        };
        server = server_aggregate_and_step(&deltas, &server, cfg)?;
        let round = r + 1;
        if round % cfg.eval_every == 0 || round == cfg.rounds {
            rows.push(row(round, evaluator.evaluate(&server.theta)?, start)?);
        }
    }

    Ok(RunLog { summary: summarize(&rows, cfg.eps_fosp), rows, g0, delta, final_theta: server.theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{gen_fleet, FleetSpec, TabularMdp, TabularSizes};
    use crate::federation::{ExactEvaluator, FedAlgo};
    use crate::policies::SoftmaxPolicy;

    fn fleet(n: usize) -> (Vec<TabularMdp<f64>>, SoftmaxPolicy) {
        let sizes = TabularSizes { n_states: 3, n_actions: 2, horizon: 4, ..Default::default() };
        let spec = FleetSpec::tabular(n, 0.5, 11, sizes);
        let envs = gen_fleet::<f64>(&spec).unwrap().as_tabular().unwrap().to_vec();
        let pol = SoftmaxPolicy::for_mdp(&envs[0]);
        (envs, pol)
    }

    fn run(envs: &[TabularMdp<f64>], pol: &SoftmaxPolicy, cfg: &FedConfig<f64>) -> RunLog<f64> {
        let theta0 = PolicyParams::zeros(6);
        run_rounds(envs, pol, &theta0, cfg, &ExactEvaluator { envs, policy: pol }).unwrap()
    }

    #[test]
    fn zero_rounds_logs_only_the_start() {
        let (envs, pol) = fleet(2);
        let log = run(&envs, &pol, &FedConfig::new(FedAlgo::FedSvrpgM, 2, 3, 0, 0.1, 0.1, 0.5));
        assert_eq!(log.rows.len(), 1);
        assert_eq!(log.rows[0].round, 0);
        assert_eq!(log.final_theta, PolicyParams::zeros(6));
    }

    #[test]
    fn evaluation_stride_includes_last_round() {
        let (envs, pol) = fleet(2);
        let cfg = FedConfig { eval_every: 3, ..FedConfig::new(FedAlgo::FedSvrpgM, 2, 2, 7, 0.1, 0.1, 0.5) };
        let rounds: Vec<usize> = run(&envs, &pol, &cfg).rows.iter().map(|r| r.round).collect();
        assert_eq!(rounds, vec![0, 3, 6, 7]);
    }

    #[test]
    fn baseline_equals_unit_momentum() {
        let (envs, pol) = fleet(3);
        let svrpg = FedConfig { master_seed: 5, ..FedConfig::new(FedAlgo::FedSvrpgM, 3, 4, 6, 0.2, 0.3, 1.0) };
        let pavg = FedConfig { algo: FedAlgo::Pavg, ..svrpg.clone() };
        let (a, b) = (run(&envs, &pol, &svrpg), run(&envs, &pol, &pavg));
        assert_eq!(a.rows_without_timing(), b.rows_without_timing());
        assert_eq!(a.final_theta, b.final_theta);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let (envs, pol) = fleet(4);
        for algo in [FedAlgo::FedSvrpgM, FedAlgo::FedHapgM] {
            let cfg = FedConfig { master_seed: 9, ..FedConfig::new(algo, 4, 3, 5, 0.1, 0.2, 0.4) };
            let par = FedConfig { parallel: true, ..cfg.clone() };
            let (a, b) = (run(&envs, &pol, &cfg), run(&envs, &pol, &par));
            assert_eq!(a.rows_without_timing(), b.rows_without_timing());
            assert_eq!(a.final_theta, b.final_theta);
        }
    }

    #[test]
    fn summary_and_logged_constants() {
        let (envs, pol) = fleet(2);
        let cfg =
            FedConfig { eps_fosp: Some(f64::INFINITY), ..FedConfig::new(FedAlgo::FedSvrpgM, 2, 2, 3, 0.1, 0.1, 0.5) };
        let log = run(&envs, &pol, &cfg);
        assert_eq!(log.summary.rounds_to_eps, Some(0));
        assert_eq!(log.summary.final_value, log.rows.last().unwrap().value);
        let obj = crate::oracle::fleet_objective(&envs, &pol, &PolicyParams::zeros(6)).unwrap();
        assert_eq!(log.g0, obj.mean_agent_grad_norm_sq);
        assert!((log.delta - (envs[0].return_bound() - obj.value)).abs() < 1e-15);
    }

    #[test]
    fn agent_count_must_match_fleet() {
        let (envs, pol) = fleet(2);
        let cfg = FedConfig::new(FedAlgo::FedSvrpgM, 3, 2, 3, 0.1, 0.1, 0.5);
        let theta0 = PolicyParams::zeros(6);
        assert!(run_rounds(&envs, &pol, &theta0, &cfg, &ExactEvaluator { envs: &envs, policy: &pol }).is_err());
    }
}
