use rand::Rng;

use super::{sample_categorical, Environment};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::scalar::Scalar;
use rand::SeedableRng;

/// How raw transition-kernel entries are drawn before row normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelDistribution {
    /// Entries iid uniform on `[0, 1)`.
    #[default]
    UniformNormalized,
    /// Entries iid Bernoulli(1/2). An all-zero row gets a single unit
    /// entry at a uniformly chosen successor.
    Bernoulli,
}

/// Finite MDP `(S, A, P, R, γ, ρ)` with a fixed horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp<T> {
    n_states: usize,
    n_actions: usize,
    /// Row-major `P(s' | s, a)` at `(s * A + a) * S + s'`.
    kernel: Vec<T>,
    /// `R(s, a)` at `s * A + a`.
    rewards: Vec<T>,
    init_dist: Vec<T>,
    gamma: T,
    horizon: usize,
    r_max: T,
}

impl<T: Scalar> TabularMdp<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        n_actions: usize,
        kernel: Vec<T>,
        rewards: Vec<T>,
        init_dist: Vec<T>,
        gamma: T,
        horizon: usize,
        r_max: T,
    ) -> Result<Self> {
        let mdp = Self { n_states, n_actions, kernel, rewards, init_dist, gamma, horizon, r_max };
        mdp.validate()?;
        Ok(mdp)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Construction(m));
        let (s, a) = (self.n_states, self.n_actions);
        if s == 0 || a == 0 {
            return bad(format!("need at least one state and action, got S={s}, A={a}"));
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if !(self.gamma > T::zero() && self.gamma < T::one()) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.r_max > T::zero()) || !self.r_max.is_finite() {
            return bad(format!("r_max must be positive and finite, got {}", self.r_max));
        }
        if self.kernel.len() != s * a * s {
            return bad(format!("kernel has {} entries, want {}", self.kernel.len(), s * a * s));
        }
        if self.rewards.len() != s * a {
            return bad(format!("reward table has {} entries, want {}", self.rewards.len(), s * a));
        }
        if self.init_dist.len() != s {
            return bad(format!("initial distribution has {} entries, want {s}", self.init_dist.len()));
        }
        for (row_idx, row) in self.kernel.chunks(s).enumerate() {
            check_distribution(row)
                .map_err(|m| Error::Construction(format!("kernel row (s={}, a={}): {m}", row_idx / a, row_idx % a)))?;
        }
        check_distribution(&self.init_dist).map_err(|m| Error::Construction(format!("initial distribution: {m}")))?;
        if let Some(r) = self.rewards.iter().find(|&&r| !(r >= T::zero() && r <= self.r_max)) {
            return bad(format!("reward {r} outside [0, {}]", self.r_max));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[T] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.kernel[start..start + self.n_states]
    }

    pub fn kernel(&self) -> &[T] {
        &self.kernel
    }

    pub fn rewards(&self) -> &[T] {
        &self.rewards
    }

    pub fn init_dist(&self) -> &[T] {
        &self.init_dist
    }

    /// Replace the transition kernel, re-validating stochasticity.
    pub fn with_kernel(&self, kernel: Vec<T>) -> Result<Self> {
        let mut next = self.clone();
        next.kernel = kernel;
        next.validate()?;
        Ok(next)
    }

    pub fn with_rewards(&self, rewards: Vec<T>) -> Result<Self> {
        let mut next = self.clone();
        next.rewards = rewards;
        next.validate()?;
        Ok(next)
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        let mut next = self.clone();
        next.horizon = horizon;
        next.validate()?;
        Ok(next)
    }
}

fn check_distribution<T: Scalar>(p: &[T]) -> std::result::Result<(), String> {
    if let Some(x) = p.iter().find(|&&x| !(x >= T::zero()) || !x.is_finite()) {
        return Err(format!("entry {x} is negative or non-finite"));
    }
    let total: T = p.iter().copied().sum();
    if (total - T::one()).abs() > T::stochastic_tol() {
        return Err(format!("sums to {total}, not 1"));
    }
    Ok(())
}

impl<T: Scalar> Environment<T> for TabularMdp<T> {
    type State = usize;
    type Action = usize;

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn gamma(&self) -> T {
        self.gamma
    }

    fn r_max(&self) -> T {
        self.r_max
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_categorical(&self.init_dist, rng)
    }

    fn reward(&self, s: usize, a: usize) -> T {
        self.rewards[s * self.n_actions + a]
    }

    fn sample_next<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        sample_categorical(self.transition_row(s, a), rng)
    }
}

pub(crate) fn random_kernel<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    n_states: usize,
    n_actions: usize,
    dist: KernelDistribution,
) -> Vec<T> {
    let mut kernel = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        let mut row: Vec<f64> = match dist {
            KernelDistribution::UniformNormalized => (0..n_states).map(|_| rng.random::<f64>()).collect(),
            KernelDistribution::Bernoulli => {
                (0..n_states).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect()
            }
        };
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|x| *x /= total);
        } else {
            let hit = rng.random_range(0..n_states);
            row.iter_mut().enumerate().for_each(|(j, x)| *x = if j == hit { 1.0 } else { 0.0 });
        }
        kernel.extend(row.into_iter().map(T::of));
    }
    kernel
}

pub(crate) fn random_rewards<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    n_states: usize,
    n_actions: usize,
    r_max: f64,
) -> Vec<T> {
    (0..n_states * n_actions).map(|_| T::of(rng.random::<f64>() * r_max).min(T::of(r_max))).collect()
}

/// Random MDP: kernel entries iid uniform then row-normalized, rewards iid
/// uniform on `[0, r_max)`, uniform initial distribution.
pub fn gen_random_mdp<T: Scalar>(
    seed: u64,
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    gamma: T,
    r_max: T,
) -> Result<TabularMdp<T>> {
    gen_random_mdp_with(seed, n_states, n_actions, horizon, gamma, r_max, KernelDistribution::UniformNormalized)
}

pub fn gen_random_mdp_with<T: Scalar>(
    seed: u64,
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    gamma: T,
    r_max: T,
    kernel_dist: KernelDistribution,
) -> Result<TabularMdp<T>> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::Construction(format!(
            "need at least one state and action, got S={n_states}, A={n_actions}"
        )));
    }
    if !(r_max > T::zero()) {
        return Err(Error::Construction(format!("r_max must be positive, got {r_max}")));
    }
    let mut rng = SimRng::seed_from_u64(seed);
    let kernel = random_kernel(&mut rng, n_states, n_actions, kernel_dist);
    let rewards = random_rewards(&mut rng, n_states, n_actions, r_max.as_f64());
    let init = vec![T::one() / T::of_usize(n_states); n_states];
    TabularMdp::new(n_states, n_actions, kernel, rewards, init, gamma, horizon, r_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::sample_trajectory;
    use crate::policies::SoftmaxPolicy;
    use crate::vector::PolicyParams;

    fn row_sums_ok(m: &TabularMdp<f64>) -> bool {
        m.kernel().chunks(m.n_states()).all(|r| (r.iter().sum::<f64>() - 1.0).abs() <= 1e-12)
    }

    #[test]
    fn generated_rows_are_stochastic() {
        let m = gen_random_mdp(7, 5, 5, 10, 0.9, 1.0).unwrap();
        assert!(row_sums_ok(&m));
        assert!(m.rewards().iter().all(|&r| (0.0..=1.0).contains(&r)));
        assert!((m.init_dist().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_random_mdp(11, 4, 3, 5, 0.9, 2.0).unwrap();
        let b = gen_random_mdp(11, 4, 3, 5, 0.9, 2.0).unwrap();
        assert_eq!(a, b);
        let c = gen_random_mdp(12, 4, 3, 5, 0.9, 2.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bernoulli_kernel_is_stochastic() {
        let m = gen_random_mdp_with(3, 6, 2, 4, 0.9, 1.0, KernelDistribution::Bernoulli).unwrap();
        assert!(row_sums_ok(&m));
    }

    #[test]
    fn invalid_sizes_rejected() {
        assert!(gen_random_mdp::<f64>(1, 0, 2, 3, 0.9, 1.0).is_err());
        assert!(gen_random_mdp::<f64>(1, 2, 0, 3, 0.9, 1.0).is_err());
        assert!(gen_random_mdp::<f64>(1, 2, 2, 0, 0.9, 1.0).is_err());
        assert!(gen_random_mdp::<f64>(1, 2, 2, 3, 1.0, 1.0).is_err());
        assert!(gen_random_mdp::<f64>(1, 2, 2, 3, 0.9, 0.0).is_err());
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = TabularMdp::new(1, 1, vec![0.5], vec![0.0], vec![1.0], 0.9, 1, 1.0);
        assert!(err.is_err());
        let err = TabularMdp::new(1, 1, vec![1.0], vec![2.0], vec![1.0], 0.9, 1, 1.0);
        assert!(err.is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let m = gen_random_mdp::<f32>(7, 5, 5, 10, 0.9, 1.0).unwrap();
        assert!(m.kernel().chunks(5).all(|r| (r.iter().sum::<f32>() - 1.0).abs() <= 1e-5));
    }

    #[test]
    fn single_state_trajectory_stays_put() {
        let m = gen_random_mdp(5, 1, 3, 6, 0.9, 1.0).unwrap();
        let pol = SoftmaxPolicy::new(1, 3);
        let theta = PolicyParams::from_vec(vec![0.3, -1.0, 2.0]);
        let mut rng = SimRng::seed_from_u64(1);
        let tau = sample_trajectory(&m, &pol, &theta, 0, &mut rng).unwrap();
        assert_eq!(tau.len(), 6);
        assert!(tau.steps.iter().all(|st| st.state == 0));
    }
}
