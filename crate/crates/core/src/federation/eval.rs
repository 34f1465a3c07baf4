use crate::envs::{discounted_return, sample_trajectory, Environment, TabularMdp};
use crate::error::{Error, Result};
use crate::estimators::gpomdp_grad;
use crate::oracle::fleet_objective;
use crate::policies::{DiscretePolicy, Policy};
use crate::rng::stream;
use crate::scalar::Scalar;
use crate::vector::{Direction, PolicyParams};

/// Objective statistics at one parameter vector, reported in `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// `J(θ)`, the fleet-average expected discounted return.
    pub value: f64,
    /// `‖∇J(θ)‖²`.
    pub grad_norm_sq: f64,
    /// `(1/N) Σ ‖∇J_i(θ)‖²`.
    pub mean_agent_grad_norm_sq: f64,
    /// Standard error of `value`; zero for exact evaluation.
    pub value_stderr: f64,
}

pub trait Evaluator<T>: Sync {
    fn evaluate(&self, params: &PolicyParams<T>) -> Result<Evaluation>;
}

/// Exact dynamic-programming evaluation of a tabular fleet.
pub struct ExactEvaluator<'a, T, P> {
    pub envs: &'a [TabularMdp<T>],
    pub policy: &'a P,
}

impl<T: Scalar, P: DiscretePolicy<T>> Evaluator<T> for ExactEvaluator<'_, T, P> {
    fn evaluate(&self, params: &PolicyParams<T>) -> Result<Evaluation> {
        let obj = fleet_objective(self.envs, self.policy, params)?;
        Ok(Evaluation {
            value: obj.value.as_f64(),
            grad_norm_sq: obj.grad_norm_sq.as_f64(),
            mean_agent_grad_norm_sq: obj.mean_agent_grad_norm_sq.as_f64(),
            value_stderr: 0.0,
        })
    }
}

/// Large-batch Monte-Carlo evaluation for environments without an exact
/// oracle. Every call reuses the same per-agent streams, so successive
/// evaluations share their noise. The squared gradient norm is the norm of a
/// batch mean and is biased upward by its variance.
pub struct MonteCarloEvaluator<'a, E, P> {
    pub envs: &'a [E],
    pub policy: &'a P,
    /// Trajectories per agent.
    pub batch: usize,
    pub seed: u64,
}

impl<T, E, P> Evaluator<T> for MonteCarloEvaluator<'_, E, P>
where
    T: Scalar,
    E: Environment<T>,
    P: Policy<T, State = E::State, Action = E::Action>,
{
    fn evaluate(&self, params: &PolicyParams<T>) -> Result<Evaluation> {
        if self.envs.is_empty() || self.batch < 2 {
            return Err(Error::Construction("Monte-Carlo evaluation needs agents and a batch of at least 2".into()));
        }
        let n = self.envs.len() as f64;
        let b = self.batch as f64;
        let (mut value, mut var_of_mean, mut agent_sq) = (0.0, 0.0, 0.0);
        let mut grad = Direction::<T>::zeros(self.policy.dim());
        for (i, env) in self.envs.iter().enumerate() {
            let mut rng = stream(self.seed, "eval", &[i as u64]);
            let mut returns = Vec::with_capacity(self.batch);
            let mut g_i = Direction::zeros(self.policy.dim());
            for _ in 0..self.batch {
                let tau = sample_trajectory(env, self.policy, params, i, &mut rng)?;
                returns.push(discounted_return(&tau, env.gamma()).as_f64());
                g_i.axpy(T::one(), &gpomdp_grad(&tau, params, self.policy, env.gamma())?)?;
            }
            let g_i = g_i.scaled(T::one() / T::of_usize(self.batch));
            let mean = returns.iter().sum::<f64>() / b;
            let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (b - 1.0);
            value += mean / n;
            var_of_mean += var / (b * n * n);
            agent_sq += g_i.norm_sq().as_f64() / n;
            grad.axpy(T::one() / T::of(n), &g_i)?;
        }
        Ok(Evaluation {
            value,
            grad_norm_sq: grad.norm_sq().as_f64(),
            mean_agent_grad_norm_sq: agent_sq,
            value_stderr: var_of_mean.sqrt(),
        })
    }
}
