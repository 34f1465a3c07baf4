use rand::Rng;

use super::{DiscretePolicy, Policy, PolicyBounds};
use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::vector::PolicyParams;

/// Linear-Gaussian policy restricted to a finite action grid:
/// `π_θ(a|s) ∝ exp(−(x_a − φ_sᵀθ)² / 2σ²)`.
///
/// This is the tabular form of the Gaussian family: the same score
/// `φ_s (x_a − E[x]) / σ²` and Hessian `−φ_s φ_sᵀ Var(x) / σ⁴`, with the
/// Gaussian normalizer replaced by a finite sum, so exact enumeration applies.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGaussianPolicy<T> {
    features: Vec<Vec<T>>,
    grid: Vec<T>,
    sigma: T,
}

impl<T: Scalar> GridGaussianPolicy<T> {
    /// `features[s]` is `φ_s`; all rows share one length.
    pub fn new(features: Vec<Vec<T>>, grid: Vec<T>, sigma: T) -> Result<Self> {
        if features.is_empty() || grid.is_empty() {
            return Err(Error::Construction("grid policy needs states and actions".into()));
        }
        let d = features[0].len();
        if d == 0 || features.iter().any(|f| f.len() != d) {
            return Err(Error::Construction("state features must share a positive length".into()));
        }
        if features.iter().flatten().chain(&grid).any(|x| !x.is_finite()) {
            return Err(Error::Construction("grid policy inputs must be finite".into()));
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::Construction(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { features, grid, sigma })
    }

    /// `φ_s = (1, z, …, z^degree)` with `z` spread evenly over `[−1, 1]`
    /// across the states, and `n_actions` grid points evenly over
    /// `[−bound, bound]`.
    pub fn polynomial(n_states: usize, n_actions: usize, degree: usize, bound: T, sigma: T) -> Result<Self> {
        let spread = |i: usize, n: usize| {
            if n == 1 {
                T::zero()
            } else {
                T::of(2.0 * i as f64 / (n - 1) as f64 - 1.0)
            }
        };
        let features = (0..n_states)
            .map(|s| {
                let z = spread(s, n_states);
                std::iter::successors(Some(T::one()), |&p| Some(p * z)).take(degree + 1).collect()
            })
            .collect();
        let grid = (0..n_actions).map(|a| bound * spread(a, n_actions)).collect();
        Self::new(features, grid, sigma)
    }

    pub fn n_params(&self) -> usize {
        self.features[0].len()
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    fn check(&self, d: usize, s: usize, a: Option<usize>) -> Result<()> {
        check_dim("grid gaussian parameters", self.n_params(), d)?;
        if s >= self.features.len() {
            return Err(Error::OutOfRange { what: "state", index: s, size: self.features.len() });
        }
        if let Some(a) = a {
            if a >= self.grid.len() {
                return Err(Error::OutOfRange { what: "action", index: a, size: self.grid.len() });
            }
        }
        Ok(())
    }

    fn logits(&self, params: &PolicyParams<T>, s: usize) -> Vec<T> {
        let mu: T = self.features[s].iter().zip(params.iter()).map(|(&f, &t)| f * t).sum();
        let two_var = T::of(2.0) * self.sigma * self.sigma;
        self.grid.iter().map(|&x| -(x - mu) * (x - mu) / two_var).collect()
    }

    fn probs(&self, params: &PolicyParams<T>, s: usize) -> Vec<T> {
        let z = self.logits(params, s);
        let top = z.iter().copied().fold(T::neg_infinity(), T::max);
        let e: Vec<T> = z.iter().map(|&l| (l - top).exp()).collect();
        let total: T = e.iter().copied().sum();
        e.into_iter().map(|x| x / total).collect()
    }

    /// Mean and variance of the grid point under `π(·|s)`.
    fn moments(&self, params: &PolicyParams<T>, s: usize) -> (T, T) {
        let p = self.probs(params, s);
        let mean: T = p.iter().zip(&self.grid).map(|(&q, &x)| q * x).sum();
        let var: T = p.iter().zip(&self.grid).map(|(&q, &x)| q * (x - mean) * (x - mean)).sum();
        (mean, var)
    }
}

impl<T: Scalar> Policy<T> for GridGaussianPolicy<T> {
    type State = usize;
    type Action = usize;

    fn dim(&self) -> usize {
        self.n_params()
    }

    fn log_prob(&self, params: &PolicyParams<T>, s: usize, a: usize) -> Result<T> {
        self.check(params.dim(), s, Some(a))?;
        let z = self.logits(params, s);
        let top = z.iter().copied().fold(T::neg_infinity(), T::max);
        Ok(z[a] - top - z.iter().map(|&l| (l - top).exp()).sum::<T>().ln())
    }

    fn add_score(&self, params: &PolicyParams<T>, s: usize, a: usize, weight: T, out: &mut [T]) -> Result<()> {
        self.check(params.dim(), s, Some(a))?;
        check_dim("grid gaussian score buffer", self.n_params(), out.len())?;
        let (mean, _) = self.moments(params, s);
        let coef = weight * (self.grid[a] - mean) / (self.sigma * self.sigma);
        for (o, &f) in out.iter_mut().zip(&self.features[s]) {
            *o = *o + coef * f;
        }
        Ok(())
    }

    fn add_score_hvp(
        &self,
        params: &PolicyParams<T>,
        s: usize,
        a: usize,
        v: &[T],
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        self.check(params.dim(), s, Some(a))?;
        check_dim("grid gaussian hvp vector", self.n_params(), v.len())?;
        check_dim("grid gaussian hvp buffer", self.n_params(), out.len())?;
        let (_, var) = self.moments(params, s);
        let phi = &self.features[s];
        let phi_v: T = phi.iter().zip(v).map(|(&f, &x)| f * x).sum();
        let coef = weight * phi_v * var / self.sigma.powi(4);
        for (o, &f) in out.iter_mut().zip(phi) {
            *o = *o - coef * f;
        }
        Ok(())
    }

    fn sample_action<R: Rng + ?Sized>(&self, params: &PolicyParams<T>, s: usize, rng: &mut R) -> Result<usize> {
        self.check(params.dim(), s, None)?;
        Ok(crate::envs::sample_categorical(&self.probs(params, s), rng))
    }

    /// With grid width `D` and `B_φ = max_s ‖φ_s‖`: `|x_a − E[x]| ≤ D` and
    /// `Var(x) ≤ D²/4`, so `G = D B_φ / σ²` and `M = D² B_φ² / 4σ⁴`.
    fn bounds(&self) -> Result<PolicyBounds<T>> {
        let hi = self.grid.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = self.grid.iter().copied().fold(T::infinity(), T::min);
        let width = hi - lo;
        let b_phi = self.features.iter().map(|f| f.iter().map(|&x| x * x).sum::<T>().sqrt()).fold(T::zero(), T::max);
        let s2 = self.sigma * self.sigma;
        Ok(PolicyBounds { g: width * b_phi / s2, m: width * width * b_phi * b_phi / (T::of(4.0) * s2 * s2) })
    }
}

impl<T: Scalar> DiscretePolicy<T> for GridGaussianPolicy<T> {
    fn n_states(&self) -> usize {
        self.features.len()
    }

    fn n_actions(&self) -> usize {
        self.grid.len()
    }

    fn action_probs(&self, params: &PolicyParams<T>, s: usize) -> Result<Vec<T>> {
        self.check(params.dim(), s, None)?;
        Ok(self.probs(params, s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::vector::Direction;
    use rand::Rng;

    fn policy() -> GridGaussianPolicy<f64> {
        GridGaussianPolicy::polynomial(3, 4, 2, 1.5, 0.7).unwrap()
    }

    #[test]
    fn layout() {
        let p = policy();
        assert_eq!(
            (p.n_params(), DiscretePolicy::<f64>::n_states(&p), DiscretePolicy::<f64>::n_actions(&p)),
            (3, 3, 4)
        );
        for (x, y) in p.grid().iter().zip([-1.5, -0.5, 0.5, 1.5]) {
            assert!((x - y).abs() < 1e-15);
        }
        let one = GridGaussianPolicy::<f64>::polynomial(1, 1, 1, 1.0, 1.0).unwrap();
        assert_eq!(one.grid(), &[0.0]);
        assert!(GridGaussianPolicy::<f64>::new(vec![vec![1.0], vec![]], vec![0.0], 1.0).is_err());
        assert!(GridGaussianPolicy::<f64>::new(vec![vec![1.0]], vec![0.0], 0.0).is_err());
    }

    #[test]
    fn probabilities_match_log_prob() {
        let p = policy();
        let theta = PolicyParams::from_vec(vec![0.3, -1.0, 2.0]);
        for s in 0..3 {
            let probs = p.action_probs(&theta, s).unwrap();
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for (a, &q) in probs.iter().enumerate() {
                assert!((p.log_prob(&theta, s, a).unwrap().exp() - q).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn score_and_hvp_match_finite_differences() {
        let p = policy();
        let h = 1e-6;
        let mut rng = stream(3, "grid", &[]);
        for _ in 0..20 {
            let theta = PolicyParams::from_vec((0..3).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect());
            let v = Direction::from_vec((0..3).map(|_| rng.random::<f64>() - 0.5).collect());
            for s in 0..3 {
                for a in 0..4 {
                    let score = p.score(&theta, s, a).unwrap();
                    for j in 0..3 {
                        let mut e = vec![0.0; 3];
                        e[j] = h;
                        let e = Direction::from_vec(e);
                        let fd = (p.log_prob(&theta.ascend(&e, 1.0).unwrap(), s, a).unwrap()
                            - p.log_prob(&theta.ascend(&e, -1.0).unwrap(), s, a).unwrap())
                            / (2.0 * h);
                        assert!((fd - score[j]).abs() < 1e-7);
                    }
                    let hv = p.score_hvp(&theta, s, a, &v).unwrap();
                    let plus = p.score(&theta.ascend(&v, h).unwrap(), s, a).unwrap();
                    let minus = p.score(&theta.ascend(&v, -h).unwrap(), s, a).unwrap();
                    for j in 0..3 {
                        assert!(((plus[j] - minus[j]) / (2.0 * h) - hv[j]).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn bounds_hold_on_random_probes() {
        let p = policy();
        let b = p.bounds().unwrap();
        let mut rng = stream(4, "grid-bounds", &[]);
        for _ in 0..2000 {
            let theta = PolicyParams::from_vec((0..3).map(|_| 6.0 * rng.random::<f64>() - 3.0).collect());
            let v = Direction::from_vec((0..3).map(|_| rng.random::<f64>() - 0.5).collect());
            let s = rng.random_range(0..3);
            let a = rng.random_range(0..4);
            assert!(p.score(&theta, s, a).unwrap().norm() <= b.g);
            assert!(p.score_hvp(&theta, s, a, &v).unwrap().norm() <= b.m * v.norm() + 1e-15);
        }
    }
}
