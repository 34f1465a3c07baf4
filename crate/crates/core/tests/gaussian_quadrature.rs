//! The Gaussian family has continuous actions, so trajectory enumeration is
//! replaced by deterministic quadrature: a two-step point-mass episode is
//! integrated over the initial state and the first action, with the
//! transition noise integrated in closed form.

use fedpg_core::envs::{Environment, PointMassEnv, Step, Trajectory};
use fedpg_core::estimators::gpomdp_grad;
use fedpg_core::policies::{LinearGaussianPolicy, Policy, PolynomialFeatures};
use fedpg_core::PolicyParams;

const GOAL: f64 = 0.8;
const GAIN: f64 = 0.5;
const NOISE: f64 = 0.3;
const INIT: f64 = 0.5;
const GAMMA: f64 = 0.9;
const SIGMA: f64 = 0.7;
const BOUND: f64 = 1.8;

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (1..=n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Composite rule on `[lo, hi]` with `panels` panels.
fn rule(lo: f64, hi: f64, panels: usize, gl: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let w = (hi - lo) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let mid = lo + (p as f64 + 0.5) * w;
            gl.iter().map(move |&(x, wt)| (mid + 0.5 * w * x, 0.5 * w * wt))
        })
        .collect()
}

fn normal_pdf(x: f64, sd: f64) -> f64 {
    (-(x * x) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// `E_ξ exp(−(y + nξ − goal)²)` for standard normal ξ.
fn smoothed_reward(y: f64) -> f64 {
    let s = 1.0 + 2.0 * NOISE * NOISE;
    (-(y - GOAL).powi(2) / s).exp() / s.sqrt()
}

struct Quad {
    xs: Vec<(f64, f64)>,
    acts: Vec<(f64, f64)>,
}

impl Quad {
    fn new() -> Self {
        let gl = gauss_legendre(24);
        Self { xs: rule(-12.0 * INIT, 12.0 * INIT, 24, &gl), acts: rule(-BOUND, BOUND, 24, &gl) }
    }

    /// Truncated action density at `a` given the untruncated mean, normalized
    /// by this rule's own integral.
    fn action_weights(&self, mu: f64) -> Vec<f64> {
        let raw: Vec<f64> = self.acts.iter().map(|&(a, w)| w * normal_pdf(a - mu, SIGMA)).collect();
        let z: f64 = raw.iter().sum();
        raw.into_iter().map(|r| r / z).collect()
    }

    fn value(&self, pol: &LinearGaussianPolicy<f64>, env: &PointMassEnv<f64>, theta: &PolicyParams<f64>) -> f64 {
        let mut total = 0.0;
        for &(x0, wx) in &self.xs {
            let px = wx * normal_pdf(x0, INIT);
            let mu = pol.mean(theta, x0).unwrap();
            for (&(a0, _), pa) in self.acts.iter().zip(self.action_weights(mu)) {
                total += px * pa * (env.reward(x0, a0) + GAMMA * smoothed_reward(x0 + GAIN * a0));
            }
        }
        total
    }

    fn expected_gpomdp(
        &self,
        pol: &LinearGaussianPolicy<f64>,
        env: &PointMassEnv<f64>,
        theta: &PolicyParams<f64>,
    ) -> Vec<f64> {
        let mut total = vec![0.0; pol.dim()];
        for &(x0, wx) in &self.xs {
            let px = wx * normal_pdf(x0, INIT);
            let mu = pol.mean(theta, x0).unwrap();
            for (&(a0, _), pa) in self.acts.iter().zip(self.action_weights(mu)) {
                let x1 = x0 + GAIN * a0;
                // The second action carries a zero-mean score; placing it at
                // the action mean removes that term exactly.
                let a1 = pol.action_mean(theta, x1).unwrap();
                let tau = Trajectory {
                    steps: vec![
                        Step { state: x0, action: a0, reward: env.reward(x0, a0) },
                        Step { state: x1, action: a1, reward: smoothed_reward(x1) },
                    ],
                    env_id: 0,
                };
                let g = gpomdp_grad(&tau, theta, pol, GAMMA).unwrap();
                for (t, gi) in total.iter_mut().zip(g.iter()) {
                    *t += px * pa * gi;
                }
            }
        }
        total
    }
}

#[test]
fn gaussian_gpomdp_matches_quadrature_gradient() {
    let env = PointMassEnv::new(GOAL, GAIN, NOISE, INIT, GAMMA, 2).unwrap();
    let pol = LinearGaussianPolicy::new(PolynomialFeatures::new(2, 2.0).unwrap(), SIGMA, Some(BOUND)).unwrap();
    let quad = Quad::new();
    let h = 1e-4;
    for theta in [vec![0.2, -0.4, 0.3], vec![1.2, 0.5, -0.8], vec![-0.5, 2.0, 0.0]] {
        let theta = PolicyParams::from_vec(theta);
        let g = quad.expected_gpomdp(&pol, &env, &theta);
        for j in 0..3 {
            let (mut p, mut m) = (theta.clone(), theta.clone());
            p[j] += h;
            m[j] -= h;
            let fd = (quad.value(&pol, &env, &p) - quad.value(&pol, &env, &m)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-7, "coord {j}: fd {fd} vs {}", g[j]);
        }
    }
}
