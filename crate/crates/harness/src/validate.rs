//! The identity and bound checks, reported one line per check:
//! `CHECK <name> PASS|FAIL <detail>`.
//!
//! `quick` runs the exact identities on the tiny-MDP matrix
//! (`S, A, H ∈ {1, 2, 3}`, softmax and grid-Gaussian policies).
//! `full` adds the larger fleet checks, the collapse equivalences, 10⁵-probe
//! bound sweeps and Monte-Carlo measurement of `σ̂` and `Ŵ`.

use std::fmt;
use std::str::FromStr;

use fedpg_core::envs::{
    discounted_return, gen_fleet, gen_random_mdp, sample_trajectory, Environment, FleetSpec, TabularMdp, TabularSizes,
    Trajectory,
};
use fedpg_core::estimators::{gpomdp_grad, hapg_lambda, init_u0, is_weight, svrpg_m_direction};
use fedpg_core::federation::{run_rounds, server_aggregate_and_step, AgentDelta, ExactEvaluator, FedAlgo, ServerState};
use fedpg_core::oracle::{
    enumerate_expectation, enumerate_scalar, enumerate_trajectories, exact_gradient, exact_value,
    measure_assumption_constants, theory_constants, MeasureOptions,
};
use fedpg_core::policies::{GridGaussianPolicy, Policy, SoftmaxPolicy};
use fedpg_core::rng::{stream, SimRng};
use fedpg_core::{Dir, FedConfig, Params};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Level {
    #[default]
    Quick,
    Full,
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(format!("unknown level {other:?} (expected quick or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }

    /// A check that could not be evaluated counts as failed.
    fn errored(name: &str, err: impl fmt::Display) -> Self {
        Self::new(name, false, format!("error: {err}"))
    }

    fn max_error(name: &str, result: fedpg_core::Result<(f64, usize)>, tol: f64) -> Self {
        match result {
            Ok((err, cases)) => Self::new(name, err <= tol, format!("max_err={err:.3e} tol={tol:.0e} cases={cases}")),
            Err(e) => Self::errored(name, e),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "CHECK {} {verdict} {}", self.name, self.detail)
    }
}

/// Fault injection for testing the suite itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Faults {
    /// Scale every importance weight used by the IS-identity check by `1 + 10⁻³`.
    pub corrupt_is_weight: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ValidateOptions {
    pub level: Level,
    pub seed: u64,
    pub faults: Faults,
}

type Traj = Trajectory<usize, usize, f64>;

const GAMMA: f64 = 0.9;

/// Every `(S, A, H)` with entries in `{1, 2, 3}`.
pub fn tiny_matrix() -> Vec<TabularMdp<f64>> {
    let mut out = Vec::with_capacity(27);
    for s in 1..=3 {
        for a in 1..=3 {
            for h in 1..=3 {
                out.push(
                    gen_random_mdp((100 * s + 10 * a + h) as u64, s, a, h, GAMMA, 1.0)
                        .expect("tiny MDP parameters are valid"),
                );
            }
        }
    }
    out
}

/// Grid-Gaussian policy for a tiny MDP: affine features over the states,
/// actions spread over `[−1, 1]`.
pub fn grid_policy(mdp: &TabularMdp<f64>) -> GridGaussianPolicy<f64> {
    GridGaussianPolicy::polynomial(mdp.n_states(), mdp.n_actions(), 1, 1.0, 0.6).expect("valid grid policy")
}

fn random_params(rng: &mut SimRng, d: usize, scale: f64) -> Params {
    Params::from_vec((0..d).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect())
}

fn random_dir(rng: &mut SimRng, d: usize, scale: f64) -> Dir {
    Dir::from_vec((0..d).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Run `f` with both policy families on `mdp`, folding the maxima and counts.
fn both_families(
    mdp: &TabularMdp<f64>,
    mut f: impl FnMut(&dyn Fn() -> Family) -> fedpg_core::Result<(f64, usize)>,
) -> fedpg_core::Result<(f64, usize)> {
    let soft = || Family::Softmax(SoftmaxPolicy::for_mdp(mdp));
    let grid = || Family::Grid(grid_policy(mdp));
    let (e1, n1) = f(&soft)?;
    let (e2, n2) = f(&grid)?;
    Ok((e1.max(e2), n1 + n2))
}

pub enum Family {
    Softmax(SoftmaxPolicy),
    Grid(GridGaussianPolicy<f64>),
}

/// Dispatch a generic body over the two discrete policy families.
macro_rules! with_policy {
    ($fam:expr, $pol:ident => $body:expr) => {
        match $fam {
            Family::Softmax($pol) => $body,
            Family::Grid($pol) => $body,
        }
    };
}

fn fold(acc: (f64, usize), x: (f64, usize)) -> (f64, usize) {
    (acc.0.max(x.0), acc.1 + x.1)
}

pub fn check_enumeration_mass(mdps: &[TabularMdp<f64>], seed: u64) -> Check {
    let mut rng = stream(seed, "validate-mass", &[]);
    let mut run = || -> fedpg_core::Result<(f64, usize)> {
        let mut acc = (0.0, 0);
        for mdp in mdps {
            let fam = [Family::Softmax(SoftmaxPolicy::for_mdp(mdp)), Family::Grid(grid_policy(mdp))];
            for f in &fam {
                let err = with_policy!(f, pol => {
                    let theta = random_params(&mut rng, Policy::<f64>::dim(pol), 2.0);
                    (enumerate_trajectories(mdp, pol, &theta, |_, _| Ok(()))? - 1.0).abs()
                });
                acc = fold(acc, (err, 1));
            }
        }
        Ok(acc)
    };
    Check::max_error("enumeration_mass", run(), 1e-12)
}

/// `E[g(τ|θ)] = ∇J(θ)` by enumeration.
pub fn check_gpomdp_unbiased(mdps: &[TabularMdp<f64>], per_mdp: usize, seed: u64) -> Check {
    let mut rng = stream(seed, "validate-unbiased", &[]);
    let mut run = || -> fedpg_core::Result<(f64, usize)> {
        let mut acc = (0.0, 0);
        for mdp in mdps {
            acc = fold(
                acc,
                both_families(mdp, |fam| {
                    with_policy!(&fam(), pol => {
                        let mut worst = 0.0f64;
                        for _ in 0..per_mdp {
                            let theta = random_params(&mut rng, Policy::<f64>::dim(pol), 2.0);
                            let mean = enumerate_expectation(mdp, pol, &theta, |tau: &Traj| {
                                Ok(gpomdp_grad(tau, &theta, pol, mdp.gamma())?.into_vec())
                            })?;
                            worst = worst.max(max_diff(&mean, exact_gradient(mdp, pol, &theta)?.as_slice()));
                        }
                        Ok((worst, per_mdp))
                    })
                })?,
            );
        }
        Ok(acc)
    };
    Check::max_error("gpomdp_unbiased", run(), 1e-10)
}

/// `E_{τ~θ}[w(τ|θ',θ) g(τ|θ')] = ∇J(θ')` by enumeration.
pub fn check_is_identity(mdps: &[TabularMdp<f64>], pairs: usize, seed: u64, faults: Faults) -> Check {
    let mut rng = stream(seed, "validate-is", &[]);
    let corrupt = if faults.corrupt_is_weight { 1.0 + 1e-3 } else { 1.0 };
    let mut run = || -> fedpg_core::Result<(f64, usize)> {
        let mut acc = (0.0, 0);
        for mdp in mdps {
            acc = fold(
                acc,
                both_families(mdp, |fam| {
                    with_policy!(&fam(), pol => {
                        let mut worst = 0.0f64;
                        for _ in 0..pairs {
                            let behavior = random_params(&mut rng, Policy::<f64>::dim(pol), 1.5);
                            let target = random_params(&mut rng, Policy::<f64>::dim(pol), 1.5);
                            let shifted = enumerate_expectation(mdp, pol, &behavior, |tau: &Traj| {
                                let w = corrupt * is_weight(tau, &target, &behavior, pol, None)?;
                                Ok(gpomdp_grad(tau, &target, pol, mdp.gamma())?.scaled(w).into_vec())
                            })?;
                            worst = worst.max(max_diff(&shifted, exact_gradient(mdp, pol, &target)?.as_slice()));
                        }
                        Ok((worst, pairs))
                    })
                })?,
            );
        }
        Ok(acc)
    };
    Check::max_error("is_identity", run(), 1e-10)
}

/// `E_{τ~θ(α)}[Λ] = ∇²J(θ(α)) v`, against a central difference of the exact
/// gradient.
pub fn check_hessian_identity(mdps: &[TabularMdp<f64>], alphas: &[f64], n_v: usize, seed: u64) -> Check {
    let h = 1e-5;
    let mut rng = stream(seed, "validate-hessian", &[]);
    let mut run = || -> fedpg_core::Result<(f64, usize)> {
        let mut acc = (0.0, 0);
        for mdp in mdps {
            acc = fold(
                acc,
                both_families(mdp, |fam| {
                    with_policy!(&fam(), pol => {
                        let d = Policy::<f64>::dim(pol);
                        let cur = random_params(&mut rng, d, 1.0);
                        let prev = random_params(&mut rng, d, 1.0);
                        let mut worst = 0.0f64;
                        for &alpha in alphas {
                            let mixed = cur.mix_toward(&prev, alpha)?;
                            for _ in 0..n_v {
                                let v = random_dir(&mut rng, d, 1.0);
                                let lam = enumerate_expectation(mdp, pol, &mixed, |tau: &Traj| {
                                    Ok(hapg_lambda(tau, &mixed, &v, pol, mdp.gamma())?.into_vec())
                                })?;
                                let plus = exact_gradient(mdp, pol, &mixed.ascend(&v, h)?)?;
                                let minus = exact_gradient(mdp, pol, &mixed.ascend(&v, -h)?)?;
                                let fd: Vec<f64> = plus.iter().zip(minus.iter()).map(|(p, m)| (p - m) / (2.0 * h)).collect();
                                worst = worst.max(max_diff(&lam, &fd));
                            }
                        }
                        Ok((worst, alphas.len() * n_v))
                    })
                })?,
            );
        }
        Ok(acc)
    };
    Check::max_error("hessian_identity", run(), 1e-5)
}

/// Dynamic-programming value against enumerated discounted returns.
pub fn check_value_identity(mdps: &[TabularMdp<f64>], seed: u64) -> Check {
    let mut rng = stream(seed, "validate-value", &[]);
    let mut run = || -> fedpg_core::Result<(f64, usize)> {
        let mut acc = (0.0, 0);
        for mdp in mdps {
            acc = fold(
                acc,
                both_families(mdp, |fam| {
                    with_policy!(&fam(), pol => {
                        let theta = random_params(&mut rng, Policy::<f64>::dim(pol), 2.0);
                        let by_enum = enumerate_scalar(mdp, pol, &theta, |tau| Ok(discounted_return(tau, mdp.gamma())))?;
                        Ok(((by_enum - exact_value(mdp, pol, &theta)?).abs(), 1))
                    })
                })?,
            );
        }
        Ok(acc)
    };
    Check::max_error("value_identity", run(), 1e-12)
}

/// Exact gradient against a central difference of the exact value on a
/// `n_envs`-agent `S = A = 5`, `H = 20` fleet.
pub fn check_gradient_triangle(n_envs: usize, thetas_per_env: usize, seed: u64) -> Check {
    let h = 1e-5;
    let run = || -> fedpg_core::Result<(f64, usize)> {
        let spec = FleetSpec::tabular(n_envs, 1.0, seed, TabularSizes::default());
        let fleet = gen_fleet::<f64>(&spec)?;
        let envs = fleet.as_tabular().expect("tabular fleet");
        let pol = SoftmaxPolicy::for_mdp(&envs[0]);
        let mut rng = stream(seed, "validate-triangle", &[]);
        let mut worst = 0.0f64;
        for mdp in envs {
            for _ in 0..thetas_per_env {
                let theta = random_params(&mut rng, pol.n_params(), 2.0);
                let grad = exact_gradient(mdp, &pol, &theta)?;
                for j in 0..pol.n_params() {
                    let mut e = vec![0.0; pol.n_params()];
                    e[j] = h;
                    let e = Dir::from_vec(e);
                    let fd = (exact_value(mdp, &pol, &theta.ascend(&e, 1.0)?)?
                        - exact_value(mdp, &pol, &theta.ascend(&e, -1.0)?)?)
                        / (2.0 * h);
                    worst = worst.max((fd - grad[j]).abs());
                }
            }
        }
        Ok((worst, n_envs * thetas_per_env))
    };
    Check::max_error("gradient_triangle", run(), 1e-6)
}

fn small_fleet(n: usize, kappa: f64, seed: u64) -> fedpg_core::Result<Vec<TabularMdp<f64>>> {
    let sizes = TabularSizes { n_states: 3, n_actions: 3, horizon: 5, ..TabularSizes::default() };
    let fleet = gen_fleet::<f64>(&FleetSpec::tabular(n, kappa, seed, sizes))?;
    Ok(fleet.as_tabular().expect("tabular fleet").to_vec())
}

/// FedSVRPG-M at `β = 1` and PAvg on matched seeds: identical logs and
/// final parameters, bit for bit.
pub fn check_collapse_pavg(seed: u64) -> Check {
    let run = || -> fedpg_core::Result<bool> {
        let envs = small_fleet(4, 0.5, seed)?;
        let pol = SoftmaxPolicy::for_mdp(&envs[0]);
        let theta0 = Params::zeros(pol.n_params());
        let eval = ExactEvaluator { envs: &envs, policy: &pol };
        let mk = |algo| FedConfig { master_seed: seed, ..FedConfig::new(algo, 4, 3, 6, 0.05, 0.15, 1.0) };
        let a = run_rounds(&envs, &pol, &theta0, &mk(FedAlgo::FedSvrpgM), &eval)?;
        let b = run_rounds(&envs, &pol, &theta0, &mk(FedAlgo::Pavg), &eval)?;
        Ok(a.rows_without_timing() == b.rows_without_timing() && a.final_theta == b.final_theta)
    };
    match run() {
        Ok(same) => Check::new("collapse_pavg", same, format!("bitwise_equal={same}")),
        Err(e) => Check::errored("collapse_pavg", e),
    }
}

/// With `N = K = 1` and `η` a power of two, the federated run must equal
/// the centralized momentum recursion `u_{r+1} = β g + (1−β)(u_r + g − w g̃)`,
/// `θ_{r+1} = θ_r + λ u_{r+1}`, replayed here on the same random streams.
pub fn check_collapse_centralized(seed: u64) -> Check {
    let (eta, lambda, beta, rounds) = (0.125, 0.3, 0.4, 8);
    let run = || -> fedpg_core::Result<bool> {
        let envs = small_fleet(1, 0.0, seed)?;
        let env = &envs[0];
        let pol = SoftmaxPolicy::for_mdp(env);
        let theta0 = Params::zeros(pol.n_params());
        let cfg =
            FedConfig { master_seed: seed, ..FedConfig::new(FedAlgo::FedSvrpgM, 1, 1, rounds, eta, lambda, beta) };
        let eval = ExactEvaluator { envs: &envs, policy: &pol };
        let fed = run_rounds(&envs, &pol, &theta0, &cfg, &eval)?;

        let mut u = init_u0(&envs, &pol, &theta0, 1, rounds, beta, seed)?;
        let (mut theta, mut prev) = (theta0.clone(), theta0);
        for r in 0..rounds {
            let mut rng = stream(seed, "agent", &[r as u64, 0]);
            let tau = sample_trajectory(env, &pol, &theta, 0, &mut rng)?;
            let g = gpomdp_grad(&tau, &theta, &pol, env.gamma())?;
            let g_anchor = gpomdp_grad(&tau, &prev, &pol, env.gamma())?;
            let w = is_weight(&tau, &prev, &theta, &pol, None)?;
            u = svrpg_m_direction(&g, &g_anchor, w, &u, beta)?;
            prev = theta.clone();
            theta = theta.ascend(&u, lambda)?;
        }
        Ok(theta == fed.final_theta)
    };
    match run() {
        Ok(same) => Check::new("collapse_centralized", same, format!("bitwise_equal={same} rounds={rounds}")),
        Err(e) => Check::errored("collapse_centralized", e),
    }
}

/// `θ_{r+1} − θ_r = (λ/ηNK) Σ Δ_i` with dyadic inputs, where every
/// operation is exact, so the identity must hold with equality.
pub fn check_aggregation_identity(seed: u64, trials: usize) -> Check {
    let mut rng = stream(seed, "validate-aggregate", &[]);
    let dyadic = |rng: &mut SimRng| (rng.random_range(-512i32..=512) as f64) / 64.0;
    let mut run = || -> fedpg_core::Result<bool> {
        for _ in 0..trials {
            let n = 1usize << rng.random_range(0..4);
            let k = 1usize << rng.random_range(0..4);
            let eta = 1.0 / (1u32 << rng.random_range(1..6)) as f64;
            let lambda = 1.0 / (1u32 << rng.random_range(0..4)) as f64;
            let d = 4;
            let theta = Params::from_vec((0..d).map(|_| dyadic(&mut rng)).collect());
            let server = ServerState::new(theta.clone(), Dir::zeros(d))?;
            let deltas: Vec<AgentDelta<f64>> = (0..n)
                .rev()
                .map(|agent_id| AgentDelta {
                    agent_id,
                    delta: Dir::from_vec((0..d).map(|_| dyadic(&mut rng)).collect()),
                })
                .collect();
            let cfg = FedConfig::new(FedAlgo::FedSvrpgM, n, k, 1, eta, lambda, 0.5);
            let next = server_aggregate_and_step(&deltas, &server, &cfg)?;
            let coef = lambda / (eta * n as f64 * k as f64);
            for j in 0..d {
                let sum: f64 = deltas.iter().map(|x| x.delta[j]).sum();
                if next.theta[j] - theta[j] != coef * sum {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };
    match run() {
        Ok(exact) => Check::new("aggregation_identity", exact, format!("exact={exact} trials={trials}")),
        Err(e) => Check::errored("aggregation_identity", e),
    }
}

/// Violation counts of the four constant bounds over `probes` random probes
/// each, spread over the tiny matrix and both policy families.
///
/// `C_w` needs `W`, the bound on `Var(w)` over the probed region; it is
/// measured first, per MDP and policy, on `W_PAIRS` independent pairs drawn
/// like the probes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundSweep {
    pub probes: usize,
    pub grad_norm: usize,
    pub lipschitz: usize,
    pub is_variance: usize,
    pub hessian_estimate: usize,
    /// Largest observed ratio to the bound, per check.
    pub worst: [f64; 4],
    /// Largest measured `Ŵ` over the instances.
    pub w_hat: f64,
}

const W_PAIRS: usize = 500;
const THETA_SCALE: f64 = 3.0;
const PAIR_RADIUS: f64 = 0.5;

/// A point at uniform distance in `[0, PAIR_RADIUS]` from `theta`.
fn near_point(rng: &mut SimRng, theta: &Params) -> fedpg_core::Result<Params> {
    let step = random_dir(rng, theta.dim(), 1.0);
    let radius = PAIR_RADIUS * rng.random::<f64>();
    theta.ascend(&step.scaled(radius / step.norm().max(f64::MIN_POSITIVE)), 1.0)
}

/// Exact `Var(w(τ|near, θ))` for `τ ~ p(·|θ)`; the mean is one.
fn exact_is_variance<P: fedpg_core::policies::DiscretePolicy<f64>>(
    mdp: &TabularMdp<f64>,
    pol: &P,
    theta: &Params,
    near: &Params,
) -> fedpg_core::Result<f64> {
    Ok(enumerate_scalar(mdp, pol, theta, |t| Ok(is_weight(t, near, theta, pol, None)?.powi(2)))? - 1.0)
}

fn family(mdp: &TabularMdp<f64>, which: usize) -> Family {
    if which == 0 {
        Family::Softmax(SoftmaxPolicy::for_mdp(mdp))
    } else {
        Family::Grid(grid_policy(mdp))
    }
}

pub fn sweep_bounds(mdps: &[TabularMdp<f64>], probes: usize, seed: u64) -> fedpg_core::Result<BoundSweep> {
    let mut out = BoundSweep { probes, ..BoundSweep::default() };
    let mut w_hat = vec![[0.0f64; 2]; mdps.len()];
    for (i, mdp) in mdps.iter().enumerate() {
        for (which, slot) in w_hat[i].iter_mut().enumerate() {
            let mut rng = stream(seed, "validate-w-hat", &[i as u64, which as u64]);
            with_policy!(&family(mdp, which), pol => {
                for _ in 0..W_PAIRS {
                    let theta = random_params(&mut rng, Policy::<f64>::dim(pol), THETA_SCALE);
                    let near = near_point(&mut rng, &theta)?;
                    *slot = slot.max(exact_is_variance(mdp, pol, &theta, &near)?);
                }
            });
            out.w_hat = out.w_hat.max(*slot);
        }
    }

    let mut rng = stream(seed, "validate-bounds", &[]);
    for p in 0..probes {
        let i = rng.random_range(0..mdps.len());
        let mdp = &mdps[i];
        let which = p % 2;
        with_policy!(&family(mdp, which), pol => {
            let d = Policy::<f64>::dim(pol);
            let c = theory_constants(pol.bounds()?, mdp.horizon(), mdp.r_max(), mdp.gamma(), w_hat[i][which], 0.0)?;
            let theta = random_params(&mut rng, d, THETA_SCALE);
            let other = random_params(&mut rng, d, THETA_SCALE);
            let v = random_dir(&mut rng, d, 1.0);
            let tau = sample_trajectory(mdp, pol, &theta, 0, &mut rng)?;

            let g = gpomdp_grad(&tau, &theta, pol, mdp.gamma())?.norm();
            out.worst[0] = out.worst[0].max(g / c.c_g);
            out.grad_norm += usize::from(g > c.c_g);

            let dist = theta.distance(&other)?;
            let diff = exact_gradient(mdp, pol, &theta)?.sub(&exact_gradient(mdp, pol, &other)?)?.norm();
            out.worst[1] = out.worst[1].max(diff / (c.l * dist));
            out.lipschitz += usize::from(diff > c.l * dist);

            let near = near_point(&mut rng, &theta)?;
            let var = exact_is_variance(mdp, pol, &theta, &near)?;
            let nd = near.distance(&theta)?;
            let cap = c.c_w * nd * nd;
            if cap > 0.0 {
                out.worst[2] = out.worst[2].max(var / cap);
            }
            out.is_variance += usize::from(var > cap + 1e-12);

            let lam = hapg_lambda(&tau, &theta, &v, pol, mdp.gamma())?.norm();
            let cap = c.l4_t * v.norm();
            out.worst[3] = out.worst[3].max(lam / cap);
            out.hessian_estimate += usize::from(lam > cap);
        });
    }
    Ok(out)
}

pub fn bound_checks(mdps: &[TabularMdp<f64>], probes: usize, seed: u64) -> Vec<Check> {
    const NAMES: [&str; 4] = ["bound_grad_norm", "bound_lipschitz", "bound_is_variance", "bound_hessian_estimate"];
    match sweep_bounds(mdps, probes, seed) {
        Ok(s) => {
            let counts = [s.grad_norm, s.lipschitz, s.is_variance, s.hessian_estimate];
            NAMES
                .iter()
                .zip(counts)
                .zip(s.worst)
                .map(|((name, v), w)| {
                    let mut detail = format!("violations={v} probes={probes} worst_ratio={w:.4}");
                    if *name == "bound_is_variance" {
                        detail.push_str(&format!(" W_hat_max={:.4e}", s.w_hat));
                    }
                    Check::new(name, v == 0, detail)
                })
                .collect()
        }
        Err(e) => NAMES.iter().map(|n| Check::errored(n, &e)).collect(),
    }
}

/// Monte-Carlo `σ̂` and `Ŵ` on a default-size fleet, with the constants they
/// imply. Passes when the measurements are finite.
pub fn check_assumption_constants(seed: u64) -> Check {
    let run = || -> fedpg_core::Result<String> {
        let envs = gen_fleet::<f64>(&FleetSpec::tabular(4, 0.5, seed, TabularSizes::default()))?;
        let envs = envs.as_tabular().expect("tabular fleet");
        let pol = SoftmaxPolicy::for_mdp(&envs[0]);
        let opts = MeasureOptions { samples_per_point: 100, ..MeasureOptions::default() };
        let m = measure_assumption_constants(envs, &pol, &opts, seed)?;
        let b = Policy::<f64>::bounds(&pol)?;
        let c = theory_constants(b, envs[0].horizon(), envs[0].r_max(), envs[0].gamma(), m.w_hat, m.sigma_hat)?;
        if !(m.sigma_hat.is_finite() && m.w_hat.is_finite()) {
            return Err(fedpg_core::Error::NonFinite("measured constants".into()));
        }
        Ok(format!("sigma_hat={:.6e} W_hat={:.6e} C_w={:.6e} L={:.6e}", m.sigma_hat, m.w_hat, c.c_w, c.l))
    };
    match run() {
        Ok(detail) => Check::new("assumption_constants", true, detail),
        Err(e) => Check::errored("assumption_constants", e),
    }
}

/// Serial and parallel agent schedules give identical logs.
pub fn check_determinism(seed: u64) -> Check {
    let run = || -> fedpg_core::Result<bool> {
        let envs = small_fleet(6, 1.0, seed)?;
        let pol = SoftmaxPolicy::for_mdp(&envs[0]);
        let theta0 = Params::zeros(pol.n_params());
        let eval = ExactEvaluator { envs: &envs, policy: &pol };
        let mut same = true;
        for algo in [FedAlgo::FedSvrpgM, FedAlgo::FedHapgM] {
            let base = FedConfig { master_seed: seed, ..FedConfig::new(algo, 6, 4, 5, 0.05, 0.2, 0.3) };
            let a = run_rounds(&envs, &pol, &theta0, &base, &eval)?;
            let b = run_rounds(&envs, &pol, &theta0, &FedConfig { parallel: true, ..base }, &eval)?;
            same &= a.rows_without_timing() == b.rows_without_timing() && a.final_theta == b.final_theta;
        }
        Ok(same)
    };
    match run() {
        Ok(same) => Check::new("determinism", same, format!("serial_equals_parallel={same}")),
        Err(e) => Check::errored("determinism", e),
    }
}

pub fn run_validate(opts: &ValidateOptions) -> Vec<Check> {
    let mdps = tiny_matrix();
    let seed = opts.seed;
    let mut out = vec![
        check_enumeration_mass(&mdps, seed),
        check_value_identity(&mdps, seed),
        check_gpomdp_unbiased(&mdps, 3, seed),
        check_is_identity(&mdps, 20, seed, opts.faults),
        check_hessian_identity(&mdps, &[0.0, 0.25, 0.5, 0.75, 1.0], 2, seed),
    ];
    match opts.level {
        Level::Quick => out.extend(bound_checks(&mdps, 2_000, seed)),
        Level::Full => {
            out.push(check_gradient_triangle(10, 50, seed));
            out.push(check_collapse_pavg(seed));
            out.push(check_collapse_centralized(seed));
            out.push(check_aggregation_identity(seed, 1000));
            out.extend(bound_checks(&mdps, 100_000, seed));
            out.push(check_assumption_constants(seed));
            out.push(check_determinism(seed));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_line_format() {
        let c = Check::new("is_identity", false, "max_err=1e-3".into());
        assert_eq!(c.to_string(), "CHECK is_identity FAIL max_err=1e-3");
        assert_eq!("full".parse::<Level>(), Ok(Level::Full));
        assert!("slow".parse::<Level>().is_err());
    }

    #[test]
    fn tiny_matrix_covers_all_sizes() {
        let m = tiny_matrix();
        assert_eq!(m.len(), 27);
        assert!(m.iter().any(|x| (x.n_states(), x.n_actions(), x.horizon()) == (3, 3, 3)));
    }

    #[test]
    fn corrupted_weight_is_caught() {
        let mdps: Vec<_> = tiny_matrix().into_iter().filter(|m| m.horizon() == 2).collect();
        assert!(check_is_identity(&mdps, 2, 0, Faults::default()).passed);
        let bad = check_is_identity(&mdps, 2, 0, Faults { corrupt_is_weight: true });
        assert!(!bad.passed);
        assert!(bad.to_string().starts_with("CHECK is_identity FAIL"));
    }

    #[test]
    fn collapse_checks_pass() {
        assert!(check_collapse_pavg(3).passed);
        assert!(check_collapse_centralized(3).passed);
        assert!(check_aggregation_identity(3, 200).passed);
        assert!(check_determinism(3).passed);
    }
}
