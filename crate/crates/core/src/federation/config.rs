use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FedAlgo {
    /// Momentum variance reduction with importance-weighted anchor correction.
    FedSvrpgM,
    /// Hessian-aided momentum variance reduction.
    FedHapgM,
    /// Local policy-gradient steps with parameter averaging (β = 1 baseline).
    Pavg,
}

impl FedAlgo {
    pub fn name(self) -> &'static str {
        match self {
            FedAlgo::FedSvrpgM => "fedsvrpg_m",
            FedAlgo::FedHapgM => "fedhapg_m",
            FedAlgo::Pavg => "pavg",
        }
    }
}

impl fmt::Display for FedAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FedAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fedsvrpg_m" => Ok(FedAlgo::FedSvrpgM),
            "fedhapg_m" => Ok(FedAlgo::FedHapgM),
            "pavg" => Ok(FedAlgo::Pavg),
            other => Err(Error::Construction(format!(
                "unknown algorithm {other:?} (expected fedsvrpg_m, fedhapg_m or pavg)"
            ))),
        }
    }
}

/// How the round-0 direction `u₀` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum U0Init {
    /// Average GPOMDP gradient over `⌈K/(Rβ²)⌉` trajectories per agent.
    #[default]
    Warm,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FedConfig<T> {
    pub algo: FedAlgo,
    pub n_agents: usize,
    pub local_steps: usize,
    pub rounds: usize,
    /// Local step size η.
    pub local_step: T,
    /// Global (server) step size λ_g.
    pub global_step: T,
    pub beta: T,
    pub master_seed: u64,
    /// Evaluate every this many rounds (and always at rounds 0 and R).
    pub eval_every: usize,
    pub u0_init: U0Init,
    pub clip_is: Option<T>,
    /// Run the agents of a round on the rayon pool.
    pub parallel: bool,
    /// Threshold for the rounds-to-ε summary.
    pub eps_fosp: Option<f64>,
}

impl<T: Scalar> FedConfig<T> {
    /// Defaults: warm `u₀`, evaluation every round, serial agents, no IS cap.
    pub fn new(
        algo: FedAlgo,
        n_agents: usize,
        local_steps: usize,
        rounds: usize,
        local_step: T,
        global_step: T,
        beta: T,
    ) -> Self {
        Self {
            algo,
            n_agents,
            local_steps,
            rounds,
            local_step,
            global_step,
            beta,
            master_seed: 0,
            eval_every: 1,
            u0_init: U0Init::Warm,
            clip_is: None,
            parallel: false,
            eps_fosp: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Construction(m));
        if self.n_agents == 0 {
            return bad("n_agents must be at least 1".into());
        }
        if self.local_steps == 0 {
            return bad("local_steps must be at least 1".into());
        }
        if self.eval_every == 0 {
            return bad("eval_every must be at least 1".into());
        }
        if !(self.local_step > T::zero()) || !self.local_step.is_finite() {
            return bad(format!("local step size must be positive, got {}", self.local_step));
        }
        if !(self.global_step > T::zero()) || !self.global_step.is_finite() {
            return bad(format!("global step size must be positive, got {}", self.global_step));
        }
        if !(self.beta > T::zero() && self.beta <= T::one()) {
            return bad(format!("beta must lie in (0, 1], got {}", self.beta));
        }
        if self.algo == FedAlgo::Pavg && self.beta != T::one() {
            return bad(format!("pavg requires beta = 1, got {}", self.beta));
        }
        if let Some(c) = self.clip_is {
            if !(c > T::zero()) {
                return bad(format!("IS cap must be positive, got {c}"));
            }
        }
        Ok(())
    }
}
