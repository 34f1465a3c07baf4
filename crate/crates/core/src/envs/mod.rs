//! Environments: random tabular MDP fleets with controlled kernel
//! heterogeneity, and a continuous point-mass task.

mod fixture;
mod fleet;
mod point_mass;
mod tabular;
mod trajectory;

use std::fmt::Debug;

use rand::Rng;

use crate::scalar::Scalar;

pub use fixture::{parse_fleet_fixture, write_fleet_fixture};
pub use fleet::{gen_fleet, EnvKind, Fleet, FleetSpec, PointMassRanges, TabularSizes};
pub use point_mass::PointMassEnv;
pub use tabular::{gen_random_mdp, gen_random_mdp_with, KernelDistribution, TabularMdp};
pub use trajectory::{discounted_return, sample_trajectory, Step, Trajectory};

/// A finite-horizon, discounted episodic environment with bounded rewards.
///
/// Implementations are immutable; all randomness comes from the caller's rng.
pub trait Environment<T: Scalar>: Send + Sync {
    type State: Copy + Debug + PartialEq + Send + Sync;
    type Action: Copy + Debug + PartialEq + Send + Sync;

    fn horizon(&self) -> usize;
    fn gamma(&self) -> T;
    fn r_max(&self) -> T;

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    fn reward(&self, s: Self::State, a: Self::Action) -> T;

    fn sample_next<R: Rng + ?Sized>(&self, s: Self::State, a: Self::Action, rng: &mut R) -> Self::State;

    /// Upper bound on any discounted return: `R_max (1 - γ^H) / (1 - γ)`.
    fn return_bound(&self) -> T {
        let g = self.gamma();
        self.r_max() * (T::one() - g.powi(self.horizon() as i32)) / (T::one() - g)
    }
}

/// Draw an index from a probability vector by inverse CDF.
pub(crate) fn sample_categorical<T: Scalar, R: Rng + ?Sized>(probs: &[T], rng: &mut R) -> usize {
    let u = T::of(rng.random::<f64>());
    let mut acc = T::zero();
    for (i, &p) in probs.iter().enumerate() {
        acc = acc + p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave `acc` a hair below 1; fall back to the last
    // index with positive mass.
    probs.iter().rposition(|&p| p > T::zero()).unwrap_or(probs.len() - 1)
}
