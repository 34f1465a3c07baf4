//! Experiment configuration, read from TOML.
//!
//! Every key except `algo` is optional; [`ExperimentConfig::parse`] fills in
//! the defaults listed on each field. Unknown keys are rejected, and every
//! error names the offending key and its line.

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use fedpg_core::envs::{EnvKind, FleetSpec, KernelDistribution, PointMassRanges, TabularSizes};
use fedpg_core::federation::{FedAlgo, U0Init};
use fedpg_core::FedConfig;
use serde::Deserialize;
use toml::Spanned;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: String,
    /// 1-based line, when the problem has a location in the document.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyFamily {
    Softmax,
    /// Linear-Gaussian over polynomial features of the point-mass position.
    LinearGaussian {
        sigma: f64,
        action_bound: f64,
        degree: usize,
        feature_scale: f64,
    },
}

impl PolicyFamily {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyFamily::Softmax => "softmax",
            PolicyFamily::LinearGaussian { .. } => "linear_gaussian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxes {
    pub beta: Vec<f64>,
    pub kappa: Vec<f64>,
    pub n_agents: Vec<usize>,
}

impl SweepAxes {
    pub fn cells(&self) -> usize {
        self.beta.len() * self.kappa.len() * self.n_agents.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algo: FedAlgo,
    /// `env = "tabular"` (default) or `"point_mass"`. Carries the
    /// environment sizes; `n_agents` and `kappa` live alongside.
    pub env: EnvKind,
    /// Default 20.
    pub n_agents: usize,
    /// Default 0.
    pub kappa: f64,
    /// Default false.
    pub perturb_rewards: bool,
    /// Softmax for tabular fleets, linear-Gaussian for point mass.
    pub policy: PolicyFamily,
    /// Local step η, default 0.05.
    pub eta: f64,
    /// Server step λ_g, default `η·K`.
    pub global_step: f64,
    /// Default 1 for pavg, 0.1 otherwise.
    pub beta: f64,
    /// K, default 32.
    pub local_steps: usize,
    /// R, default 100.
    pub rounds: usize,
    /// Default 0.
    pub seed: u64,
    /// Default 100.
    pub repeats: usize,
    /// Default `results.csv`.
    pub output: PathBuf,
    /// Default 1.
    pub eval_every: usize,
    pub eps_fosp: Option<f64>,
    /// `u0 = "warm"` (default) or `"zero"`.
    pub u0_init: U0Init,
    pub clip_is: Option<f64>,
    /// Trajectories per agent for Monte-Carlo evaluation of point-mass
    /// fleets. Default 200.
    pub eval_batch: usize,
    pub sweep: Option<SweepAxes>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    beta: Option<Spanned<Vec<f64>>>,
    kappa: Option<Spanned<Vec<f64>>>,
    n_agents: Option<Spanned<Vec<i64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    algo: Option<Spanned<String>>,
    env: Option<Spanned<String>>,
    n_agents: Option<Spanned<i64>>,
    n_states: Option<Spanned<i64>>,
    n_actions: Option<Spanned<i64>>,
    horizon: Option<Spanned<i64>>,
    gamma: Option<Spanned<f64>>,
    r_max: Option<Spanned<f64>>,
    kappa: Option<Spanned<f64>>,
    eta: Option<Spanned<f64>>,
    global_step: Option<Spanned<f64>>,
    beta: Option<Spanned<f64>>,
    local_steps: Option<Spanned<i64>>,
    rounds: Option<Spanned<i64>>,
    seed: Option<Spanned<i64>>,
    repeats: Option<Spanned<i64>>,
    output: Option<Spanned<String>>,
    eval_every: Option<Spanned<i64>>,
    eps_fosp: Option<Spanned<f64>>,
    sweep: Option<Spanned<RawSweep>>,

    u0: Option<Spanned<String>>,
    clip_is: Option<Spanned<f64>>,
    kernel: Option<Spanned<String>>,
    perturb_rewards: Option<bool>,
    policy: Option<Spanned<String>>,
    sigma_p: Option<Spanned<f64>>,
    action_bound: Option<Spanned<f64>>,
    feature_degree: Option<Spanned<i64>>,
    feature_scale: Option<Spanned<f64>>,
    eval_batch: Option<Spanned<i64>>,
    base_goal: Option<Spanned<f64>>,
    goal_spread: Option<Spanned<f64>>,
    dynamics_gain: Option<Spanned<f64>>,
    noise_std: Option<Spanned<f64>>,
    init_std: Option<Spanned<f64>>,
}

struct Ctx<'a> {
    src: &'a str,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.src.len());
        self.src[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err<T>(&self, key: &str, span: Range<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError { key: key.into(), line: Some(self.line(span)), message: message.into() })
    }

    fn count(&self, key: &str, v: &Option<Spanned<i64>>, default: usize, min: i64) -> Result<usize, ConfigError> {
        match v {
            None => Ok(default),
            Some(s) if *s.get_ref() < min => {
                self.err(key, s.span(), format!("must be at least {min}, got {}", s.get_ref()))
            }
            Some(s) => Ok(*s.get_ref() as usize),
        }
    }

    /// A float in the given interval; `open_lo`/`open_hi` exclude the ends.
    #[allow(clippy::too_many_arguments)]
    fn real(
        &self,
        key: &str,
        v: &Option<Spanned<f64>>,
        default: f64,
        lo: f64,
        hi: f64,
        open_lo: bool,
        open_hi: bool,
    ) -> Result<f64, ConfigError> {
        let Some(s) = v else { return Ok(default) };
        let x = *s.get_ref();
        let ok = x.is_finite() && if open_lo { x > lo } else { x >= lo } && if open_hi { x < hi } else { x <= hi };
        if ok {
            Ok(x)
        } else {
            let l = if open_lo { '(' } else { '[' };
            let r = if open_hi { ')' } else { ']' };
            self.err(key, s.span(), format!("must lie in {l}{lo}, {hi}{r}, got {x}"))
        }
    }

    fn positive(&self, key: &str, v: &Option<Spanned<f64>>, default: f64) -> Result<f64, ConfigError> {
        self.real(key, v, default, 0.0, f64::INFINITY, true, true)
    }

    fn choice<'v>(
        &self,
        key: &str,
        v: &'v Option<Spanned<String>>,
        default: &'v str,
        allowed: &[&str],
    ) -> Result<&'v str, ConfigError> {
        match v {
            None => Ok(default),
            Some(s) if allowed.contains(&s.get_ref().as_str()) => Ok(s.get_ref()),
            Some(s) => {
                self.err(key, s.span(), format!("expected one of {}, got {:?}", allowed.join(", "), s.get_ref()))
            }
        }
    }
}

/// Locate a deserializer error: the key comes from the message when it names
/// one, otherwise from the `key = ...` text on the offending line.
fn from_toml_error(src: &str, e: &toml::de::Error) -> ConfigError {
    let message = e.message().trim().to_string();
    let line = e.span().map(|s| src[..s.start.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1);
    let named = message
        .strip_prefix("unknown field `")
        .or_else(|| message.strip_prefix("missing field `"))
        .and_then(|rest| rest.split('`').next());
    let key = named.map(str::to_string).or_else(|| {
        let text = src.lines().nth(line? - 1)?;
        let (k, _) = text.split_once('=')?;
        Some(k.trim().to_string())
    });
    ConfigError { key: key.unwrap_or_else(|| "<document>".into()), line, message }
}

impl ExperimentConfig {
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let raw: Raw = toml::from_str(src).map_err(|e| from_toml_error(src, &e))?;
        let c = Ctx { src };

        let algo = match &raw.algo {
            None => {
                return Err(ConfigError { key: "algo".into(), line: None, message: "required key is missing".into() })
            }
            Some(s) => match s.get_ref().parse::<FedAlgo>() {
                Ok(a) => a,
                Err(e) => return c.err("algo", s.span(), e.to_string()),
            },
        };

        let n_agents = c.count("n_agents", &raw.n_agents, 20, 1)?;
        let horizon = c.count("horizon", &raw.horizon, 20, 1)?;
        let gamma = c.real("gamma", &raw.gamma, 0.9, 0.0, 1.0, true, true)?;
        let kappa = c.real("kappa", &raw.kappa, 0.0, 0.0, 1.0, false, false)?;
        let local_steps = c.count("local_steps", &raw.local_steps, 32, 1)?;
        let rounds = c.count("rounds", &raw.rounds, 100, 1)?;
        let eta = c.positive("eta", &raw.eta, 0.05)?;
        let global_step = c.positive("global_step", &raw.global_step, eta * local_steps as f64)?;
        let default_beta = if algo == FedAlgo::Pavg { 1.0 } else { 0.1 };
        let beta = c.real("beta", &raw.beta, default_beta, 0.0, 1.0, true, false)?;
        if algo == FedAlgo::Pavg && beta != 1.0 {
            let span = raw.beta.as_ref().map(|s| s.span()).unwrap_or(0..0);
            return c.err("beta", span, format!("pavg forces beta = 1, got {beta}"));
        }
        let seed = match &raw.seed {
            None => 0,
            Some(s) if *s.get_ref() < 0 => return c.err("seed", s.span(), "must be non-negative"),
            Some(s) => *s.get_ref() as u64,
        };
        let repeats = c.count("repeats", &raw.repeats, 100, 1)?;
        let eval_every = c.count("eval_every", &raw.eval_every, 1, 1)?;
        let output = match &raw.output {
            None => PathBuf::from("results.csv"),
            Some(s) if s.get_ref().trim().is_empty() => return c.err("output", s.span(), "must not be empty"),
            Some(s) => PathBuf::from(s.get_ref()),
        };
        let eps_fosp = match &raw.eps_fosp {
            None => None,
            v => Some(c.positive("eps_fosp", v, 0.0)?),
        };
        let clip_is = match &raw.clip_is {
            None => None,
            v => Some(c.positive("clip_is", v, 0.0)?),
        };
        let u0_init = match c.choice("u0", &raw.u0, "warm", &["warm", "zero"])? {
            "zero" => U0Init::Zero,
            _ => U0Init::Warm,
        };
        let eval_batch = c.count("eval_batch", &raw.eval_batch, 200, 2)?;

        let env_name = c.choice("env", &raw.env, "tabular", &["tabular", "point_mass"])?;
        let default_policy = if env_name == "tabular" { "softmax" } else { "linear_gaussian" };
        let policy_name = c.choice("policy", &raw.policy, default_policy, &["softmax", "linear_gaussian"])?;
        if policy_name != default_policy {
            let span = raw.policy.as_ref().map(|s| s.span()).unwrap_or(0..0);
            return c.err(
                "policy",
                span,
                format!("env {env_name} runs the {default_policy} policy, not {policy_name}"),
            );
        }

        let (env, policy) = if env_name == "tabular" {
            let sizes = TabularSizes {
                n_states: c.count("n_states", &raw.n_states, 5, 1)?,
                n_actions: c.count("n_actions", &raw.n_actions, 5, 1)?,
                horizon,
                gamma,
                r_max: c.positive("r_max", &raw.r_max, 1.0)?,
                kernel_dist: match c.choice("kernel", &raw.kernel, "uniform", &["uniform", "bernoulli"])? {
                    "bernoulli" => KernelDistribution::Bernoulli,
                    _ => KernelDistribution::UniformNormalized,
                },
            };
            (EnvKind::Tabular(sizes), PolicyFamily::Softmax)
        } else {
            let d = PointMassRanges::default();
            let pm = PointMassRanges {
                base_goal: c.real(
                    "base_goal",
                    &raw.base_goal,
                    d.base_goal,
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    true,
                    true,
                )?,
                goal_spread: c.real("goal_spread", &raw.goal_spread, d.goal_spread, 0.0, f64::INFINITY, false, true)?,
                dynamics_gain: c.positive("dynamics_gain", &raw.dynamics_gain, d.dynamics_gain)?,
                noise_std: c.real("noise_std", &raw.noise_std, d.noise_std, 0.0, f64::INFINITY, false, true)?,
                init_std: c.real("init_std", &raw.init_std, d.init_std, 0.0, f64::INFINITY, false, true)?,
                gamma,
                horizon,
            };
            let reach = pm.base_goal.abs() + pm.goal_spread;
            let sigma = c.positive("sigma_p", &raw.sigma_p, 0.5)?;
            let policy = PolicyFamily::LinearGaussian {
                sigma,
                // Room for the action that closes the largest goal offset in one step.
                action_bound: c.positive("action_bound", &raw.action_bound, 3.0 * sigma + reach / pm.dynamics_gain)?,
                degree: c.count("feature_degree", &raw.feature_degree, 1, 0)?,
                feature_scale: c.positive("feature_scale", &raw.feature_scale, reach + 1.0)?,
            };
            (EnvKind::PointMass(pm), policy)
        };

        let sweep = match &raw.sweep {
            None => None,
            Some(s) => {
                let base = s.span();
                let s = s.get_ref();
                let list_span = |v: &Option<Spanned<Vec<f64>>>| v.as_ref().map(|x| x.span()).unwrap_or(base.clone());
                let floats = |key: &str,
                              v: &Option<Spanned<Vec<f64>>>,
                              default: f64,
                              check: &dyn Fn(f64) -> bool,
                              what: &str| {
                    let vals = v.as_ref().map(|x| x.get_ref().clone()).unwrap_or_else(|| vec![default]);
                    if vals.is_empty() {
                        return c.err(key, list_span(v), "sweep list must not be empty");
                    }
                    if let Some(bad) = vals.iter().find(|&&x| !check(x)) {
                        return c.err(key, list_span(v), format!("every value must lie in {what}, got {bad}"));
                    }
                    Ok(vals)
                };
                let betas = floats("sweep.beta", &s.beta, beta, &|x| x > 0.0 && x <= 1.0, "(0, 1]")?;
                if algo == FedAlgo::Pavg && betas.iter().any(|&b| b != 1.0) {
                    return c.err("sweep.beta", list_span(&s.beta), "pavg forces beta = 1");
                }
                let kappas = floats("sweep.kappa", &s.kappa, kappa, &|x| (0.0..=1.0).contains(&x), "[0, 1]")?;
                let ns = match &s.n_agents {
                    None => vec![n_agents],
                    Some(v) if v.get_ref().is_empty() => {
                        return c.err("sweep.n_agents", v.span(), "sweep list must not be empty")
                    }
                    Some(v) => match v.get_ref().iter().find(|&&n| n < 1) {
                        Some(bad) => {
                            return c.err(
                                "sweep.n_agents",
                                v.span(),
                                format!("every value must be at least 1, got {bad}"),
                            )
                        }
                        None => v.get_ref().iter().map(|&n| n as usize).collect(),
                    },
                };
                Some(SweepAxes { beta: betas, kappa: kappas, n_agents: ns })
            }
        };

        Ok(Self {
            algo,
            env,
            n_agents,
            kappa,
            perturb_rewards: raw.perturb_rewards.unwrap_or(false),
            policy,
            eta,
            global_step,
            beta,
            local_steps,
            rounds,
            seed,
            repeats,
            output,
            eval_every,
            eps_fosp,
            u0_init,
            clip_is,
            eval_batch,
            sweep,
        })
    }

    pub fn env_name(&self) -> &'static str {
        match self.env {
            EnvKind::Tabular(_) => "tabular",
            EnvKind::PointMass(_) => "point_mass",
        }
    }

    /// Sweep axes, or the single configured cell.
    pub fn axes(&self) -> SweepAxes {
        self.sweep.clone().unwrap_or_else(|| SweepAxes {
            beta: vec![self.beta],
            kappa: vec![self.kappa],
            n_agents: vec![self.n_agents],
        })
    }

    pub fn fleet_spec(&self, n_agents: usize, kappa: f64, base_seed: u64) -> FleetSpec {
        FleetSpec { n_agents, kappa, base_seed, kind: self.env.clone(), perturb_rewards: self.perturb_rewards }
    }

    pub fn fed_config(&self, beta: f64, n_agents: usize, master_seed: u64) -> FedConfig {
        FedConfig {
            master_seed,
            eval_every: self.eval_every,
            u0_init: self.u0_init,
            clip_is: self.clip_is,
            eps_fosp: self.eps_fosp,
            ..FedConfig::new(self.algo, n_agents, self.local_steps, self.rounds, self.eta, self.global_step, beta)
        }
    }
}
