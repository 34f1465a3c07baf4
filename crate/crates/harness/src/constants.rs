//! Theory constants and the hyperparameters they prescribe, for a config.

use std::fmt::Write as _;

use fedpg_core::envs::{gen_fleet, Environment, Fleet};
use fedpg_core::federation::{Evaluator, FedAlgo, MonteCarloEvaluator};
use fedpg_core::oracle::{
    default_delta, fleet_objective, measure_assumption_constants, recommended_hyperparams, theory_constants, Algorithm,
    MeasureOptions,
};
use fedpg_core::policies::{LinearGaussianPolicy, Policy, PolynomialFeatures, SoftmaxPolicy};
use fedpg_core::rng::derive_seed;
use fedpg_core::Params;

use crate::config::{ExperimentConfig, PolicyFamily};
use crate::error::HarnessError;

/// `key = value` lines: policy bounds, measured `σ̂`/`Ŵ` (tabular fleets
/// only), the derived constants, `G₀`, `Δ`, and the recommended
/// `(β, λ, B, η-bound)` for the configured algorithm (the first-order plan
/// for PAvg). Uses the fleet of the first repeat.
pub fn constants_report(cfg: &ExperimentConfig) -> Result<String, HarnessError> {
    let run_id = format!("constants-s{}", cfg.seed);
    let fail = |source| HarnessError::Run { run_id: run_id.clone(), source };
    let fleet = gen_fleet::<f64>(&cfg.fleet_spec(cfg.n_agents, cfg.kappa, derive_seed(cfg.seed, "fleet", &[])))
        .map_err(fail)?;
    let measure_seed = derive_seed(cfg.seed, "measure", &[]);

    let (bounds, horizon, r_max, gamma, sigma, w, j0, g0, measured) = match (&fleet, cfg.policy) {
        (Fleet::Tabular(envs), PolicyFamily::Softmax) => {
            let pol = SoftmaxPolicy::for_mdp(&envs[0]);
            let theta0 = Params::zeros(pol.n_params());
            let obj = fleet_objective(envs, &pol, &theta0).map_err(fail)?;
            let m = measure_assumption_constants(envs, &pol, &MeasureOptions::default(), measure_seed).map_err(fail)?;
            let e = &envs[0];
            let b = Policy::<f64>::bounds(&pol).map_err(fail)?;
            (b, e.horizon(), e.r_max(), e.gamma(), m.sigma_hat, m.w_hat, obj.value, obj.mean_agent_grad_norm_sq, true)
        }
        (Fleet::PointMass(envs), PolicyFamily::LinearGaussian { sigma, action_bound, degree, feature_scale }) => {
            let features = PolynomialFeatures::new(degree, feature_scale).map_err(fail)?;
            let pol = LinearGaussianPolicy::new(features, sigma, Some(action_bound)).map_err(fail)?;
            let theta0 = Params::zeros(features.dim());
            let eval = MonteCarloEvaluator { envs, policy: &pol, batch: cfg.eval_batch, seed: measure_seed };
            let ev = eval.evaluate(&theta0).map_err(fail)?;
            let e = &envs[0];
            let b = pol.bounds().map_err(fail)?;
            (b, e.horizon(), e.r_max(), e.gamma(), 0.0, 0.0, ev.value, ev.mean_agent_grad_norm_sq, false)
        }
        (_, family) => {
            return Err(HarnessError::Setup(format!(
                "{} policy does not fit a {} fleet",
                family.name(),
                cfg.env_name()
            )))
        }
    };

    let c = theory_constants(bounds, horizon, r_max, gamma, w, sigma).map_err(fail)?;
    let delta = default_delta(r_max, gamma, horizon, j0);
    let algorithm = match cfg.algo {
        FedAlgo::FedHapgM => Algorithm::FedHapgM,
        FedAlgo::FedSvrpgM | FedAlgo::Pavg => Algorithm::FedSvrpgM,
    };
    let plan =
        recommended_hyperparams(&c, algorithm, cfg.n_agents, cfg.local_steps, cfg.rounds, delta, g0).map_err(fail)?;

    let mut out = String::new();
    let mut kv = |k: &str, v: f64| {
        let _ = writeln!(out, "{k} = {v:.6e}");
    };
    kv("G", c.g);
    kv("M", c.m);
    kv("sigma_hat", c.sigma_hat);
    kv("W_hat", c.w_hat);
    kv("L", c.l);
    kv("L_g", c.l_g);
    kv("C_g", c.c_g);
    kv("C_w", c.c_w);
    kv("L1_tilde", c.l1_t);
    kv("L2_tilde", c.l2_t);
    kv("L3_tilde", c.l3_t);
    kv("L4_tilde", c.l4_t);
    kv("L_bar", c.l_bar());
    kv("L_hat", c.l_hat());
    kv("J0", j0);
    kv("G0", g0);
    kv("Delta", delta);
    kv("beta", plan.beta);
    kv("global_step", plan.global_step);
    kv("local_step_bound", plan.local_step_bound);
    kv("smoothness", plan.smoothness);
    let _ = writeln!(out, "warm_batch = {}", plan.warm_batch);
    if !measured {
        out.push_str("# sigma_hat and W_hat are not measured for point-mass fleets; 0 was used\n");
    }
    Ok(out)
}
