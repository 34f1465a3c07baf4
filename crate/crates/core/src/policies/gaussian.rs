use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::normal::{truncated, Truncated};
use super::{Policy, PolicyBounds};
use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::vector::PolicyParams;

/// `φ(x) = (1, z, z², …, z^degree)` with `z = clamp(x / scale, −1, 1)`.
///
/// Every coordinate lies in `[−1, 1]`, so `‖φ(x)‖ ≤ √(degree + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolynomialFeatures<T> {
    pub degree: usize,
    pub scale: T,
}

impl<T: Scalar> PolynomialFeatures<T> {
    pub fn new(degree: usize, scale: T) -> Result<Self> {
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::Construction(format!("feature scale must be positive, got {scale}")));
        }
        Ok(Self { degree, scale })
    }

    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn eval(&self, x: T) -> Vec<T> {
        let z = (x / self.scale).max(-T::one()).min(T::one());
        let mut out = Vec::with_capacity(self.dim());
        let mut pow = T::one();
        for _ in 0..self.dim() {
            out.push(pow);
            pow = pow * z;
        }
        out
    }

    pub fn norm_bound(&self) -> T {
        T::of_usize(self.dim()).sqrt()
    }
}

/// Linear-Gaussian policy `a ~ N(φ(s)ᵀθ, σ²)`, optionally restricted to the
/// fixed action window `[−B_a, B_a]`.
///
/// The window does not move with θ, so the support is the same for every
/// parameter: importance weights stay well defined and the score
/// `φ (a − E[a]) / σ²` of the truncated law is exact and bounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGaussianPolicy<T> {
    features: PolynomialFeatures<T>,
    sigma: T,
    action_bound: Option<T>,
}

impl<T: Scalar> LinearGaussianPolicy<T> {
    pub fn new(features: PolynomialFeatures<T>, sigma: T, action_bound: Option<T>) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::Construction(format!("sigma must be positive, got {sigma}")));
        }
        if let Some(b) = action_bound {
            if !(b > T::zero()) || !b.is_finite() {
                return Err(Error::Construction(format!("action bound must be positive, got {b}")));
            }
        }
        Ok(Self { features, sigma, action_bound })
    }

    /// `B_a = 3σ + margin`, the margin covering how far the best action sits
    /// from zero.
    pub fn with_default_action_bound(features: PolynomialFeatures<T>, sigma: T, margin: T) -> Result<Self> {
        Self::new(features, sigma, Some(T::of(3.0) * sigma + margin.abs()))
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn action_bound(&self) -> Option<T> {
        self.action_bound
    }

    pub fn features(&self) -> &PolynomialFeatures<T> {
        &self.features
    }

    pub fn mean(&self, params: &PolicyParams<T>, x: T) -> Result<T> {
        check_dim("gaussian policy parameters", self.dim_(), params.dim())?;
        Ok(self.mean_unchecked(params, &self.features.eval(x)))
    }

    /// Mean of the (possibly truncated) action distribution.
    pub fn action_mean(&self, params: &PolicyParams<T>, x: T) -> Result<T> {
        let mu = self.mean(params, x)?;
        Ok(match self.window(mu) {
            Some(t) => T::of(t.mean),
            None => mu,
        })
    }

    fn dim_(&self) -> usize {
        self.features.dim()
    }

    fn mean_unchecked(&self, params: &PolicyParams<T>, phi: &[T]) -> T {
        phi.iter().zip(params.iter()).map(|(&f, &t)| f * t).sum()
    }

    fn window(&self, mu: T) -> Option<Truncated> {
        self.action_bound.map(|b| truncated(mu.as_f64(), self.sigma.as_f64(), -b.as_f64(), b.as_f64()))
    }

    fn sample_window<R: Rng + ?Sized>(&self, mu: f64, bound: f64, log_mass: f64, rng: &mut R) -> f64 {
        let sigma = self.sigma.as_f64();
        let two_var = 2.0 * sigma * sigma;
        if log_mass >= 0.2f64.ln() {
            loop {
                let xi: f64 = StandardNormal.sample(rng);
                let a = mu + sigma * xi;
                if a.abs() <= bound {
                    return a;
                }
            }
        }
        if mu.abs() > bound {
            // Mean outside the window: the density decays from the near edge
            // like exp(−d t/σ²) · exp(−t²/2σ²); propose t from the truncated
            // exponential and accept with the Gaussian factor.
            let d = mu.abs() - bound;
            let rate = d / (sigma * sigma);
            let width = 2.0 * bound;
            loop {
                let u: f64 = rng.random();
                let t = -(u * (-rate * width).exp_m1()).ln_1p() / rate;
                if rng.random::<f64>() < (-(t * t) / two_var).exp() {
                    return if mu > 0.0 { bound - t } else { -bound + t };
                }
            }
        }
        // Narrow window around the mean: uniform proposal.
        loop {
            let a = bound * (2.0 * rng.random::<f64>() - 1.0);
            if rng.random::<f64>() < (-(a - mu).powi(2) / two_var).exp() {
                return a;
            }
        }
    }
}

impl<T: Scalar> Policy<T> for LinearGaussianPolicy<T> {
    type State = T;
    type Action = T;

    fn dim(&self) -> usize {
        self.dim_()
    }

    fn log_prob(&self, params: &PolicyParams<T>, x: T, a: T) -> Result<T> {
        let mu = self.mean(params, x)?;
        let log_mass = match self.action_bound {
            Some(b) if a.abs() > b => return Ok(T::neg_infinity()),
            Some(_) => self.window(mu).map_or(0.0, |t| t.log_mass),
            None => 0.0,
        };
        let z = (a - mu) / self.sigma;
        let two = T::of(2.0);
        Ok(-(z * z) / two - (self.sigma * (two * T::PI()).sqrt()).ln() - T::of(log_mass))
    }

    fn add_score(&self, params: &PolicyParams<T>, x: T, a: T, weight: T, out: &mut [T]) -> Result<()> {
        check_dim("gaussian score buffer", self.dim(), out.len())?;
        check_dim("gaussian policy parameters", self.dim(), params.dim())?;
        let phi = self.features.eval(x);
        let mu = self.mean_unchecked(params, &phi);
        let centre = self.window(mu).map_or(mu, |t| T::of(t.mean));
        let coef = weight * (a - centre) / (self.sigma * self.sigma);
        for (o, &f) in out.iter_mut().zip(&phi) {
            *o = *o + coef * f;
        }
        Ok(())
    }

    /// `∇² log π = −φφᵀ Var(a) / σ⁴`, with `Var(a) = σ²` untruncated.
    fn add_score_hvp(&self, params: &PolicyParams<T>, x: T, _a: T, v: &[T], weight: T, out: &mut [T]) -> Result<()> {
        check_dim("gaussian policy parameters", self.dim(), params.dim())?;
        check_dim("gaussian hvp vector", self.dim(), v.len())?;
        check_dim("gaussian hvp buffer", self.dim(), out.len())?;
        let phi = self.features.eval(x);
        let var = self.sigma * self.sigma;
        let curvature = match self.window(self.mean_unchecked(params, &phi)) {
            Some(t) => T::of(t.var) / (var * var),
            None => T::one() / var,
        };
        let proj: T = phi.iter().zip(v).map(|(&f, &u)| f * u).sum();
        let coef = -weight * proj * curvature;
        for (o, &f) in out.iter_mut().zip(&phi) {
            *o = *o + coef * f;
        }
        Ok(())
    }

    fn sample_action<R: Rng + ?Sized>(&self, params: &PolicyParams<T>, x: T, rng: &mut R) -> Result<T> {
        let mu = self.mean(params, x)?;
        match (self.action_bound, self.window(mu)) {
            (Some(b), Some(t)) => Ok(T::of(self.sample_window(mu.as_f64(), b.as_f64(), t.log_mass, rng))),
            _ => {
                let xi: f64 = StandardNormal.sample(rng);
                Ok(mu + self.sigma * T::of(xi))
            }
        }
    }

    /// `G = 2 B_a B_φ / σ²` (since `|a − E[a]| ≤ 2 B_a`), `M = B_φ² / σ²`
    /// (since the truncated variance never exceeds σ²). Undefined without an
    /// action bound.
    fn bounds(&self) -> Result<PolicyBounds<T>> {
        let b_a = self
            .action_bound
            .ok_or_else(|| Error::Unsupported("gaussian score is unbounded without an action bound".into()))?;
        let b_phi = self.features.norm_bound();
        let var = self.sigma * self.sigma;
        Ok(PolicyBounds { g: T::of(2.0) * b_a * b_phi / var, m: b_phi * b_phi / var })
    }
}
