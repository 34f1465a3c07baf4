use rand::Rng;
use rayon::prelude::*;

use crate::envs::{sample_trajectory, Environment, TabularMdp};
use crate::error::{Error, Result};
use crate::estimators::{gpomdp_grad, is_weight};
use crate::policies::DiscretePolicy;
use crate::rng::{stream, SimRng};
use crate::scalar::Scalar;
use crate::vector::PolicyParams;

use super::exact::exact_gradient;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    /// Number of random parameter probes (and of parameter pairs); ≥ 100.
    pub n_points: usize,
    /// Trajectories per probe and agent.
    pub samples_per_point: usize,
    /// Probes are drawn uniformly from `[-theta_scale, theta_scale]^d`.
    pub theta_scale: f64,
    /// Pairs are at distance uniform in `[0, pair_radius]`.
    pub pair_radius: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self { n_points: 100, samples_per_point: 200, theta_scale: 1.0, pair_radius: 0.5 }
    }
}

/// Empirical surrogates for the gradient-variance and IS-variance bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredConstants {
    /// `sup_θ E‖g(τ|θ) − ∇J_i(θ)‖²` over probes and agents.
    pub sigma_sq_hat: f64,
    pub sigma_hat: f64,
    /// `sup Var(w(τ|θ₁, θ₂))` over probe pairs and agents.
    pub w_hat: f64,
}

/// Monte-Carlo `E‖g(τ|θ) − ∇J(θ)‖²` around the exact gradient.
pub fn gradient_variance<T, P>(
    mdp: &TabularMdp<T>,
    policy: &P,
    params: &PolicyParams<T>,
    samples: usize,
    rng: &mut SimRng,
) -> Result<T>
where
    T: Scalar,
    P: DiscretePolicy<T>,
{
    if samples == 0 {
        return Err(Error::Construction("need at least one sample".into()));
    }
    let mean = exact_gradient(mdp, policy, params)?;
    let mut acc = T::zero();
    for _ in 0..samples {
        let tau = sample_trajectory(mdp, policy, params, 0, rng)?;
        acc = acc + gpomdp_grad(&tau, params, policy, mdp.gamma())?.sub(&mean)?.norm_sq();
    }
    Ok(acc / T::of_usize(samples))
}

/// Monte-Carlo `Var(w(τ|target, behavior))` for `τ ~ behavior`, using the
/// known mean `E[w] = 1`.
pub fn is_weight_variance<T, P>(
    mdp: &TabularMdp<T>,
    policy: &P,
    target: &PolicyParams<T>,
    behavior: &PolicyParams<T>,
    samples: usize,
    rng: &mut SimRng,
) -> Result<T>
where
    T: Scalar,
    P: DiscretePolicy<T>,
{
    if samples == 0 {
        return Err(Error::Construction("need at least one sample".into()));
    }
    let mut acc = T::zero();
    for _ in 0..samples {
        let tau = sample_trajectory(mdp, policy, behavior, 0, rng)?;
        let dw = is_weight(&tau, target, behavior, policy, None)? - T::one();
        acc = acc + dw * dw;
    }
    Ok(acc / T::of_usize(samples))
}

fn random_params<T: Scalar>(dim: usize, scale: f64, rng: &mut SimRng) -> PolicyParams<T> {
    PolicyParams::from_vec((0..dim).map(|_| T::of(rng.random_range(-scale..=scale))).collect())
}

/// Point at distance `radius` from `origin` in a uniformly random direction.
fn random_partner<T: Scalar>(origin: &PolicyParams<T>, radius: f64, rng: &mut SimRng) -> PolicyParams<T> {
    let dir: Vec<f64> = (0..origin.dim()).map(|_| rng.random::<f64>() - 0.5).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = if norm > 0.0 { radius / norm } else { 0.0 };
    PolicyParams::from_vec(origin.iter().zip(&dir).map(|(&o, &d)| o + T::of(d * scale)).collect())
}

/// Sup over random probes of the per-agent gradient variance and IS-weight
/// variance. Probes run in parallel; probe `p` uses its own seeded stream so
/// the result does not depend on the thread count.
pub fn measure_assumption_constants<T, P>(
    envs: &[TabularMdp<T>],
    policy: &P,
    opts: &MeasureOptions,
    seed: u64,
) -> Result<MeasuredConstants>
where
    T: Scalar,
    P: DiscretePolicy<T>,
{
    if opts.n_points < 100 {
        return Err(Error::Construction(format!("need at least 100 probes, got {}", opts.n_points)));
    }
    if envs.is_empty() || opts.samples_per_point == 0 {
        return Err(Error::Construction("need at least one agent and one sample per probe".into()));
    }
    if !(opts.theta_scale >= 0.0) || !(opts.pair_radius >= 0.0) {
        return Err(Error::Construction("probe scales must be non-negative".into()));
    }
    let per_probe: Vec<(f64, f64)> = (0..opts.n_points)
        .into_par_iter()
        .map(|p| {
            let mut rng = stream(seed, "measure", &[p as u64]);
            let theta = random_params::<T>(policy.dim(), opts.theta_scale, &mut rng);
            let partner = random_partner(&theta, rng.random::<f64>() * opts.pair_radius, &mut rng);
            let (mut sig, mut w) = (0.0f64, 0.0f64);
            for mdp in envs {
                sig = sig.max(gradient_variance(mdp, policy, &theta, opts.samples_per_point, &mut rng)?.as_f64());
                w = w
                    .max(is_weight_variance(mdp, policy, &partner, &theta, opts.samples_per_point, &mut rng)?.as_f64());
            }
            Ok((sig, w))
        })
        .collect::<Result<_>>()?;
    let sigma_sq_hat = per_probe.iter().map(|p| p.0).fold(0.0, f64::max);
    let w_hat = per_probe.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(MeasuredConstants { sigma_sq_hat, sigma_hat: sigma_sq_hat.sqrt(), w_hat })
}
