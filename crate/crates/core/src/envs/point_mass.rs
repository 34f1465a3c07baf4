use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Environment;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One-dimensional point mass: `x' = x + gain·a + noise·ξ`, reward
/// `exp(-(x - goal)²)` evaluated before the move.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMassEnv<T> {
    goal: T,
    dynamics_gain: T,
    noise_std: T,
    init_std: T,
    gamma: T,
    horizon: usize,
}

impl<T: Scalar> PointMassEnv<T> {
    pub fn new(goal: T, dynamics_gain: T, noise_std: T, init_std: T, gamma: T, horizon: usize) -> Result<Self> {
        let finite = [goal, dynamics_gain, noise_std, init_std].iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::Construction("point-mass parameters must be finite".into()));
        }
        if noise_std < T::zero() || init_std < T::zero() {
            return Err(Error::Construction("noise scales must be non-negative".into()));
        }
        if !(gamma > T::zero() && gamma < T::one()) {
            return Err(Error::Construction(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        if horizon == 0 {
            return Err(Error::Construction("horizon must be >= 1".into()));
        }
        Ok(Self { goal, dynamics_gain, noise_std, init_std, gamma, horizon })
    }

    pub fn goal(&self) -> T {
        self.goal
    }

    pub fn noise_std(&self) -> T {
        self.noise_std
    }
}

impl<T: Scalar> Environment<T> for PointMassEnv<T> {
    type State = T;
    type Action = T;

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn gamma(&self) -> T {
        self.gamma
    }

    fn r_max(&self) -> T {
        T::one()
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let xi: f64 = StandardNormal.sample(rng);
        self.init_std * T::of(xi)
    }

    fn reward(&self, x: T, _a: T) -> T {
        let d = x - self.goal;
        (-(d * d)).exp()
    }

    fn sample_next<R: Rng + ?Sized>(&self, x: T, a: T, rng: &mut R) -> T {
        let xi: f64 = StandardNormal.sample(rng);
        x + self.dynamics_gain * a + self.noise_std * T::of(xi)
    }
}
