//! Structural invariants over random inputs.

use fedpg_core::envs::{gen_fleet, gen_random_mdp, sample_trajectory, FleetSpec, TabularSizes};
use fedpg_core::estimators::{is_weight, log_is_weight};
use fedpg_core::federation::{server_aggregate_and_step, AgentDelta, FedAlgo, ServerState};
use fedpg_core::policies::{GridGaussianPolicy, Policy, SoftmaxPolicy};
use fedpg_core::rng::stream;
use fedpg_core::{Direction, FedConfig, PolicyParams};
use proptest::prelude::*;

fn params(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-5.0f64..5.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn importance_weights_are_positive_and_reciprocal(
        a in params(6),
        b in params(6),
        seed in 0u64..500,
    ) {
        let mdp = gen_random_mdp::<f64>(seed, 3, 2, 6, 0.9, 1.0).unwrap();
        let pol = SoftmaxPolicy::for_mdp(&mdp);
        let (a, b) = (PolicyParams::from_vec(a), PolicyParams::from_vec(b));
        let tau = sample_trajectory(&mdp, &pol, &b, 0, &mut stream(seed, "inv-is", &[])).unwrap();
        let w = is_weight(&tau, &a, &b, &pol, None).unwrap();
        prop_assert!(w > 0.0 && w.is_finite());
        prop_assert_eq!(is_weight(&tau, &b, &b, &pol, None).unwrap(), 1.0);
        let fwd = log_is_weight(&tau, &a, &b, &pol).unwrap();
        let back = log_is_weight(&tau, &b, &a, &pol).unwrap();
        prop_assert!((fwd + back).abs() <= 1e-12 * fwd.abs().max(1.0));
        let clipped = is_weight(&tau, &a, &b, &pol, Some(2.0)).unwrap();
        prop_assert!(clipped <= 2.0 && clipped <= w);
    }

    #[test]
    fn scores_stay_within_g(theta in params(3), soft in params(12), s in 0usize..4, a in 0usize..3) {
        let mdp = gen_random_mdp::<f64>(1, 4, 3, 2, 0.9, 1.0).unwrap();
        let pol = SoftmaxPolicy::for_mdp(&mdp);
        let g = Policy::<f64>::bounds(&pol).unwrap().g;
        prop_assert!(pol.score(&PolicyParams::from_vec(soft), s, a).unwrap().norm() <= g);

        let grid = GridGaussianPolicy::polynomial(4, 3, 2, 1.0, 0.6).unwrap();
        let g = grid.bounds().unwrap().g;
        prop_assert!(grid.score(&PolicyParams::from_vec(theta), s, a).unwrap().norm() <= g);
    }

    #[test]
    fn aggregation_ignores_arrival_order(
        raw in proptest::collection::vec(params(3), 1..6),
        order in any::<prop::sample::Index>(),
        lambda in 0.01f64..2.0,
    ) {
        let n = raw.len();
        let deltas: Vec<AgentDelta<f64>> = raw
            .iter()
            .enumerate()
            .map(|(i, d)| AgentDelta { agent_id: i, delta: Direction::from_vec(d.clone()) })
            .collect();
        let mut shuffled = deltas.clone();
        shuffled.rotate_left(order.index(n));
        shuffled.swap(0, n - 1);
        let server = ServerState::new(PolicyParams::from_vec(vec![0.5, -1.0, 2.0]), Direction::zeros(3)).unwrap();
        let cfg = FedConfig::new(FedAlgo::FedSvrpgM, n, 4, 1, 0.1, lambda, 0.5);
        let one = server_aggregate_and_step(&deltas, &server, &cfg).unwrap();
        let two = server_aggregate_and_step(&shuffled, &server, &cfg).unwrap();
        prop_assert_eq!(&one, &two);
        prop_assert_eq!(&one.theta_prev, &server.theta);
        for j in 0..3 {
            let mean = raw.iter().map(|d| d[j]).sum::<f64>() / (0.1 * n as f64 * 4.0);
            prop_assert!((one.u[j] - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        }
    }

    #[test]
    fn fleet_kernels_are_stochastic_and_kappa_zero_is_homogeneous(
        kappa in 0.0f64..=1.0,
        n in 1usize..6,
        seed in 0u64..1000,
    ) {
        let sizes = TabularSizes { n_states: 3, n_actions: 2, horizon: 4, ..TabularSizes::default() };
        let fleet = gen_fleet::<f64>(&FleetSpec::tabular(n, kappa, seed, sizes.clone())).unwrap();
        let envs = fleet.as_tabular().unwrap();
        prop_assert_eq!(envs.len(), n);
        for env in envs {
            for s in 0..3 {
                for a in 0..2 {
                    let row = env.transition_row(s, a);
                    prop_assert!(row.iter().all(|&p| p >= 0.0));
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
        let flat = gen_fleet::<f64>(&FleetSpec::tabular(n, 0.0, seed, sizes.clone())).unwrap();
        let flat = flat.as_tabular().unwrap();
        prop_assert!(flat.iter().all(|e| e.kernel() == flat[0].kernel()));
        // Prefix-matched: agent i does not depend on the fleet size.
        let bigger = gen_fleet::<f64>(&FleetSpec::tabular(n + 2, kappa, seed, sizes)).unwrap();
        prop_assert_eq!(&bigger.as_tabular().unwrap()[..n], envs);
    }
}
