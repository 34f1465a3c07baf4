use rand::Rng;

use super::{DiscretePolicy, Policy, PolicyBounds};
use crate::envs::TabularMdp;
use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::vector::PolicyParams;

/// Tabular softmax: `π_θ(a|s) ∝ exp θ[s·A + a]`, `d = S·A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoftmaxPolicy {
    n_states: usize,
    n_actions: usize,
}

impl SoftmaxPolicy {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self { n_states, n_actions }
    }

    pub fn for_mdp<T: Scalar>(mdp: &TabularMdp<T>) -> Self {
        Self::new(mdp.n_states(), mdp.n_actions())
    }

    /// Parameter dimension `S·A`, without naming the scalar type.
    pub fn n_params(&self) -> usize {
        self.n_states * self.n_actions
    }

    fn check(&self, d: usize, s: usize, a: Option<usize>) -> Result<()> {
        check_dim("softmax policy parameters", self.n_params(), d)?;
        if s >= self.n_states {
            return Err(Error::OutOfRange { what: "state", index: s, size: self.n_states });
        }
        if let Some(a) = a {
            if a >= self.n_actions {
                return Err(Error::OutOfRange { what: "action", index: a, size: self.n_actions });
            }
        }
        Ok(())
    }

    fn block<'a, T>(&self, params: &'a [T], s: usize) -> &'a [T] {
        &params[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Max-subtracted softmax of one state's logits.
    fn probs_of<T: Scalar>(logits: &[T]) -> Vec<T> {
        let top = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = logits.iter().map(|&z| (z - top).exp()).collect();
        let total: T = exps.iter().copied().sum();
        exps.into_iter().map(|e| e / total).collect()
    }
}

impl<T: Scalar> Policy<T> for SoftmaxPolicy {
    type State = usize;
    type Action = usize;

    fn dim(&self) -> usize {
        self.n_states * self.n_actions
    }

    fn log_prob(&self, params: &PolicyParams<T>, s: usize, a: usize) -> Result<T> {
        self.check(params.dim(), s, Some(a))?;
        let logits = self.block(params.as_slice(), s);
        let top = logits.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = top + logits.iter().map(|&z| (z - top).exp()).sum::<T>().ln();
        Ok(logits[a] - lse)
    }

    fn add_score(&self, params: &PolicyParams<T>, s: usize, a: usize, weight: T, out: &mut [T]) -> Result<()> {
        self.check(params.dim(), s, Some(a))?;
        check_dim("softmax score buffer", self.n_params(), out.len())?;
        let probs = Self::probs_of(self.block(params.as_slice(), s));
        let base = s * self.n_actions;
        for (b, &p) in probs.iter().enumerate() {
            let indicator = if b == a { T::one() } else { T::zero() };
            out[base + b] = out[base + b] + weight * (indicator - p);
        }
        Ok(())
    }

    fn score_dot(&self, params: &PolicyParams<T>, s: usize, a: usize, v: &[T]) -> Result<T> {
        self.check(params.dim(), s, Some(a))?;
        check_dim("softmax score_dot vector", self.n_params(), v.len())?;
        let probs = Self::probs_of(self.block(params.as_slice(), s));
        let vb = self.block(v, s);
        let mean: T = probs.iter().zip(vb).map(|(&p, &x)| p * x).sum();
        Ok(vb[a] - mean)
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
        check_dim("softmax hvp vector", self.n_params(), v.len())?;
        check_dim("softmax hvp buffer", self.n_params(), out.len())?;
        // Block s of the Hessian is -(diag(π) - ππᵀ); other blocks vanish.
        let probs = Self::probs_of(self.block(params.as_slice(), s));
        let vb = self.block(v, s);
        let mean: T = probs.iter().zip(vb).map(|(&p, &x)| p * x).sum();
        let base = s * self.n_actions;
        for (b, &p) in probs.iter().enumerate() {
            out[base + b] = out[base + b] - weight * p * (vb[b] - mean);
        }
        Ok(())
    }

    fn sample_action<R: Rng + ?Sized>(&self, params: &PolicyParams<T>, s: usize, rng: &mut R) -> Result<usize> {
        self.check(params.dim(), s, None)?;
        let probs = Self::probs_of(self.block(params.as_slice(), s));
        Ok(crate::envs::sample_categorical(&probs, rng))
    }

    /// `G = √2` bounds `‖e_a − π‖`; the block Hessian `diag(π) − ππᵀ` has
    /// spectral norm at most 1/2, reported conservatively as `M = 1`.
    fn bounds(&self) -> Result<PolicyBounds<T>> {
        Ok(PolicyBounds { g: T::SQRT_2(), m: T::one() })
    }
}

impl<T: Scalar> DiscretePolicy<T> for SoftmaxPolicy {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn action_probs(&self, params: &PolicyParams<T>, s: usize) -> Result<Vec<T>> {
        self.check(params.dim(), s, None)?;
        Ok(Self::probs_of(self.block(params.as_slice(), s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;
    use crate::vector::Direction;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const FD_STEP: f64 = 1e-5;

    fn random_theta(rng: &mut SimRng, d: usize) -> PolicyParams<f64> {
        PolicyParams::from_vec((0..d).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect())
    }

    #[test]
    fn uniform_log_prob() {
        let pol = SoftmaxPolicy::new(2, 4);
        let theta = PolicyParams::<f64>::zeros(8);
        for s in 0..2 {
            for a in 0..4 {
                let lp = pol.log_prob(&theta, s, a).unwrap();
                assert!((lp - 0.25f64.ln()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dominant_logit_log_prob() {
        let pol = SoftmaxPolicy::new(1, 3);
        let theta = PolicyParams::from_vec(vec![10.0, 0.0, 0.0]);
        // 1 / (1 + 2e^-10) = 0.99990921...
        let direct = 1.0 / (1.0 + 2.0 * (-10.0f64).exp());
        let lp = pol.log_prob(&theta, 0, 0).unwrap();
        assert!(lp > 0.999f64.ln());
        assert!((lp - direct.ln()).abs() < 1e-14);
    }

    #[test]
    fn huge_logits_are_stable() {
        let pol = SoftmaxPolicy::new(1, 2);
        let theta = PolicyParams::from_vec(vec![1000.0, 0.0]);
        let lp: f64 = pol.log_prob(&theta, 0, 1).unwrap();
        assert!((lp + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_score_two_actions() {
        let pol = SoftmaxPolicy::new(1, 2);
        let g = pol.score(&PolicyParams::<f64>::zeros(2), 0, 0).unwrap();
        assert_eq!(g.as_slice(), &[0.5, -0.5]);
    }

    #[test]
    fn score_is_zero_outside_state_block() {
        let pol = SoftmaxPolicy::new(3, 2);
        let theta = PolicyParams::from_vec(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let g = pol.score(&theta, 1, 1).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 0.0);
        assert_eq!(g[4], 0.0);
        assert_eq!(g[5], 0.0);
    }

    #[test]
    fn hvp_matches_hand_value() {
        // θ = 0, A = 2: π = (1/2, 1/2), diag(π) − ππᵀ = [[1/4, −1/4], [−1/4, 1/4]],
        // so −H·(1, −1) = −(1/2, −1/2).
        let pol = SoftmaxPolicy::new(1, 2);
        let v = Direction::from_vec(vec![1.0, -1.0]);
        let hv = pol.score_hvp(&PolicyParams::<f64>::zeros(2), 0, 0, &v).unwrap();
        assert_eq!(hv.as_slice(), &[-0.5, 0.5]);
    }

    #[test]
    fn hvp_of_zero_is_zero() {
        let pol = SoftmaxPolicy::new(2, 3);
        let theta = PolicyParams::from_vec(vec![0.3, -0.2, 1.0, 0.0, 0.5, -1.5]);
        let hv = pol.score_hvp(&theta, 1, 2, &Direction::zeros(6)).unwrap();
        assert!(hv.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn out_of_range_and_dimension_errors() {
        let pol = SoftmaxPolicy::new(2, 2);
        let theta = PolicyParams::<f64>::zeros(4);
        assert!(matches!(pol.log_prob(&theta, 2, 0), Err(Error::OutOfRange { what: "state", .. })));
        assert!(matches!(pol.log_prob(&theta, 0, 5), Err(Error::OutOfRange { what: "action", .. })));
        assert!(matches!(pol.log_prob(&PolicyParams::<f64>::zeros(3), 0, 0), Err(Error::DimensionMismatch { .. })));
        let v = Direction::<f64>::zeros(5);
        assert!(pol.score_hvp(&theta, 0, 0, &v).is_err());
    }

    #[test]
    fn score_and_hvp_match_finite_differences() {
        let pol = SoftmaxPolicy::new(3, 4);
        let d = 12;
        let mut rng = SimRng::seed_from_u64(17);
        for _ in 0..100 {
            let theta = random_theta(&mut rng, d);
            let s = rng.random_range(0..3);
            let a = rng.random_range(0..4);
            let score = pol.score(&theta, s, a).unwrap();
            for j in 0..d {
                let mut plus = theta.clone();
                let mut minus = theta.clone();
                plus[j] += FD_STEP;
                minus[j] -= FD_STEP;
                let fd = (pol.log_prob(&plus, s, a).unwrap() - pol.log_prob(&minus, s, a).unwrap()) / (2.0 * FD_STEP);
                assert!((fd - score[j]).abs() < 1e-6, "score[{j}] {} vs fd {fd}", score[j]);
            }
            let v = Direction::from_vec((0..d).map(|_| rng.random::<f64>() - 0.5).collect());
            let hv = pol.score_hvp(&theta, s, a, &v).unwrap();
            let plus = theta.ascend(&v, FD_STEP).unwrap();
            let minus = theta.ascend(&v, -FD_STEP).unwrap();
            let fd = pol
                .score(&plus, s, a)
                .unwrap()
                .sub(&pol.score(&minus, s, a).unwrap())
                .unwrap()
                .scaled(1.0 / (2.0 * FD_STEP));
            assert!(fd.max_abs_diff(&hv).unwrap() < 1e-6);
        }
    }

    #[test]
    fn bounds_hold_on_random_probes() {
        let pol = SoftmaxPolicy::new(3, 5);
        let b: PolicyBounds<f64> = pol.bounds().unwrap();
        assert_eq!((b.g, b.m), (2f64.sqrt(), 1.0));
        let mut rng = SimRng::seed_from_u64(99);
        let mut worst_g = 0.0f64;
        let mut worst_m = 0.0f64;
        for _ in 0..100_000 {
            let scale = 10.0 * rng.random::<f64>();
            let theta = PolicyParams::from_vec((0..15).map(|_| scale * (rng.random::<f64>() - 0.5)).collect());
            let s = rng.random_range(0..3);
            let a = rng.random_range(0..5);
            worst_g = worst_g.max(pol.score(&theta, s, a).unwrap().norm());
            let v = Direction::from_vec((0..15).map(|_| rng.random::<f64>() - 0.5).collect());
            let ratio = pol.score_hvp(&theta, s, a, &v).unwrap().norm() / v.norm();
            worst_m = worst_m.max(ratio);
        }
        assert!(worst_g <= b.g);
        assert!(worst_m <= b.m);
    }

    #[test]
    fn dominant_action_is_sampled() {
        let pol = SoftmaxPolicy::new(1, 3);
        let theta = PolicyParams::from_vec(vec![0.0, 50.0, 0.0]);
        let mut rng = SimRng::seed_from_u64(5);
        let hits = (0..10_000).filter(|_| pol.sample_action(&theta, 0, &mut rng).unwrap() == 1).count();
        assert!(hits as f64 / 1e4 > 0.999);
    }

    #[test]
    fn uniform_sampling_frequency() {
        let pol = SoftmaxPolicy::new(1, 2);
        let theta = PolicyParams::<f64>::zeros(2);
        let mut rng = SimRng::seed_from_u64(6);
        let n = 100_000;
        let zeros = (0..n).filter(|_| pol.sample_action(&theta, 0, &mut rng).unwrap() == 0).count();
        let sigma = (0.25 / n as f64).sqrt();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 3.0 * sigma);
    }

    proptest! {
        #[test]
        fn probabilities_normalize(logits in proptest::collection::vec(-30.0f64..30.0, 4)) {
            let pol = SoftmaxPolicy::new(1, 4);
            let theta = PolicyParams::from_vec(logits);
            let total: f64 = (0..4).map(|a| pol.log_prob(&theta, 0, a).unwrap().exp()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn expected_score_vanishes(logits in proptest::collection::vec(-10.0f64..10.0, 3)) {
            let pol = SoftmaxPolicy::new(1, 3);
            let theta = PolicyParams::from_vec(logits);
            let probs = pol.action_probs(&theta, 0).unwrap();
            let mut acc = Direction::zeros(3);
            for (a, &p) in probs.iter().enumerate() {
                acc.axpy(p, &pol.score(&theta, 0, a).unwrap()).unwrap();
            }
            prop_assert!(acc.norm() < 1e-12);
        }
    }
}
