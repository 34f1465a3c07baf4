use rand::Rng;

use super::tabular::{random_kernel, random_rewards};
use super::{gen_random_mdp_with, KernelDistribution, PointMassEnv, TabularMdp};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularSizes {
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub r_max: f64,
    pub kernel_dist: KernelDistribution,
}

impl Default for TabularSizes {
    fn default() -> Self {
        Self {
            n_states: 5,
            n_actions: 5,
            horizon: 20,
            gamma: 0.9,
            r_max: 1.0,
            kernel_dist: KernelDistribution::UniformNormalized,
        }
    }
}

/// Point-mass fleet: agent `i` gets `goal = base_goal + κ · offset_i` with
/// `offset_i ~ U(-goal_spread, goal_spread)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMassRanges {
    pub base_goal: f64,
    pub goal_spread: f64,
    pub dynamics_gain: f64,
    pub noise_std: f64,
    pub init_std: f64,
    pub gamma: f64,
    pub horizon: usize,
}

impl Default for PointMassRanges {
    fn default() -> Self {
        Self {
            base_goal: 1.0,
            goal_spread: 1.0,
            dynamics_gain: 0.5,
            noise_std: 0.1,
            init_std: 0.5,
            gamma: 0.9,
            horizon: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvKind {
    Tabular(TabularSizes),
    PointMass(PointMassRanges),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetSpec {
    pub n_agents: usize,
    /// Heterogeneity level: 0 = identical kernels, 1 = independent kernels.
    pub kappa: f64,
    pub base_seed: u64,
    pub kind: EnvKind,
    /// Also mix per-agent random rewards with weight κ.
    pub perturb_rewards: bool,
}

impl FleetSpec {
    pub fn tabular(n_agents: usize, kappa: f64, base_seed: u64, sizes: TabularSizes) -> Self {
        Self { n_agents, kappa, base_seed, kind: EnvKind::Tabular(sizes), perturb_rewards: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::Construction("fleet needs at least one agent".into()));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::Construction(format!("kappa must lie in [0, 1], got {}", self.kappa)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fleet<T> {
    Tabular(Vec<TabularMdp<T>>),
    PointMass(Vec<PointMassEnv<T>>),
}

impl<T> Fleet<T> {
    pub fn len(&self) -> usize {
        match self {
            Fleet::Tabular(v) => v.len(),
            Fleet::PointMass(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_tabular(&self) -> Option<&[TabularMdp<T>]> {
        match self {
            Fleet::Tabular(v) => Some(v),
            Fleet::PointMass(_) => None,
        }
    }

    pub fn as_point_mass(&self) -> Option<&[PointMassEnv<T>]> {
        match self {
            Fleet::PointMass(v) => Some(v),
            Fleet::Tabular(_) => None,
        }
    }
}

fn mix<T: Scalar>(kappa: T, own: &[T], nominal: &[T]) -> Vec<T> {
    let keep = T::one() - kappa;
    own.iter().zip(nominal).map(|(&p, &q)| kappa * p + keep * q).collect()
}

/// Build the agent fleet.
///
/// Tabular: a nominal MDP is drawn from seed `derive(base, "nominal")`;
/// agent `i`'s own kernel `P_i` from `derive(base, "kernel", i)`; the agent
/// runs on `κ P_i + (1 − κ) P_0` with the nominal rewards and initial
/// distribution (rewards are κ-mixed with `derive(base, "reward", i)` draws
/// when `perturb_rewards` is set). Agent `i` is independent of `n_agents`, so
/// a smaller fleet is a prefix of a larger one.
pub fn gen_fleet<T: Scalar>(spec: &FleetSpec) -> Result<Fleet<T>> {
    spec.validate()?;
    let kappa = T::of(spec.kappa);
    match &spec.kind {
        EnvKind::Tabular(sz) => {
            let nominal: TabularMdp<T> = gen_random_mdp_with(
                derive_seed(spec.base_seed, "nominal", &[]),
                sz.n_states,
                sz.n_actions,
                sz.horizon,
                T::of(sz.gamma),
                T::of(sz.r_max),
                sz.kernel_dist,
            )?;
            let agents = (0..spec.n_agents)
                .map(|i| {
                    let mut rng = stream(spec.base_seed, "kernel", &[i as u64]);
                    let own: Vec<T> = random_kernel(&mut rng, sz.n_states, sz.n_actions, sz.kernel_dist);
                    let mut env = nominal.with_kernel(mix(kappa, &own, nominal.kernel()))?;
                    if spec.perturb_rewards {
                        let mut rng = stream(spec.base_seed, "reward", &[i as u64]);
                        let own: Vec<T> = random_rewards(&mut rng, sz.n_states, sz.n_actions, sz.r_max);
                        let mixed =
                            mix(kappa, &own, nominal.rewards()).into_iter().map(|r| r.min(T::of(sz.r_max))).collect();
                        env = env.with_rewards(mixed)?;
                    }
                    Ok(env)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Fleet::Tabular(agents))
        }
        EnvKind::PointMass(pm) => {
            let agents = (0..spec.n_agents)
                .map(|i| {
                    let mut rng = stream(spec.base_seed, "goal", &[i as u64]);
                    let offset = pm.goal_spread * (2.0 * rng.random::<f64>() - 1.0);
                    PointMassEnv::new(
                        T::of(pm.base_goal + spec.kappa * offset),
                        T::of(pm.dynamics_gain),
                        T::of(pm.noise_std),
                        T::of(pm.init_std),
                        T::of(pm.gamma),
                        pm.horizon,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Fleet::PointMass(agents))
        }
    }
}
