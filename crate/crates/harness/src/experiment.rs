//! Repeated runs of one or more configuration cells, and their CSV output.
//!
//! Repeat `j` runs with seed `s = seed + j`. The fleet is generated from
//! `derive(s, "fleet")` and the algorithm draws from `derive(s, "algo")`, so
//! every cell of a sweep sees the same environments for the same repeat, and a
//! smaller fleet is a prefix of a larger one.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use fedpg_core::envs::{gen_fleet, Fleet};
use fedpg_core::federation::{run_rounds, ExactEvaluator, MonteCarloEvaluator};
use fedpg_core::policies::{LinearGaussianPolicy, PolynomialFeatures, SoftmaxPolicy};
use fedpg_core::rng::derive_seed;
use fedpg_core::{Params, RunLog};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, PolicyFamily, SweepAxes};
use crate::error::HarnessError;

pub const CSV_HEADER: &str =
    "run_id,algo,beta,kappa,n_agents,local_steps,rounds,seed,round,J_exact,grad_norm_sq,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub run_id: String,
    pub beta: f64,
    pub kappa: f64,
    pub n_agents: usize,
    pub repeat: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub spec: RunSpec,
    pub log: RunLog,
}

/// 17 significant digits, locale-free.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Cross product `β × κ × N × repeats`, in that nesting order.
pub fn plan_runs(cfg: &ExperimentConfig, axes: &SweepAxes) -> Vec<RunSpec> {
    let mut out = Vec::with_capacity(axes.cells() * cfg.repeats);
    for &beta in &axes.beta {
        for &kappa in &axes.kappa {
            for &n_agents in &axes.n_agents {
                for repeat in 0..cfg.repeats {
                    let seed = cfg.seed.wrapping_add(repeat as u64);
                    out.push(RunSpec {
                        run_id: format!("{}-b{beta}-k{kappa}-n{n_agents}-s{seed}", cfg.algo),
                        beta,
                        kappa,
                        n_agents,
                        repeat,
                        seed,
                    });
                }
            }
        }
    }
    out
}

/// One run from `θ₀ = 0`. `parallel_agents` only changes the schedule.
pub fn run_one(cfg: &ExperimentConfig, spec: &RunSpec, parallel_agents: bool) -> Result<RunLog, HarnessError> {
    let fail = |source| HarnessError::Run { run_id: spec.run_id.clone(), source };
    let fleet = gen_fleet::<f64>(&cfg.fleet_spec(spec.n_agents, spec.kappa, derive_seed(spec.seed, "fleet", &[])))
        .map_err(fail)?;
    let mut fed = cfg.fed_config(spec.beta, spec.n_agents, derive_seed(spec.seed, "algo", &[]));
    fed.parallel = parallel_agents;
    match (&fleet, cfg.policy) {
        (Fleet::Tabular(envs), PolicyFamily::Softmax) => {
            let policy = SoftmaxPolicy::for_mdp(&envs[0]);
            let theta0 = Params::zeros(policy.n_params());
            let eval = ExactEvaluator { envs, policy: &policy };
            run_rounds(envs, &policy, &theta0, &fed, &eval).map_err(fail)
        }
        (Fleet::PointMass(envs), PolicyFamily::LinearGaussian { sigma, action_bound, degree, feature_scale }) => {
            let features = PolynomialFeatures::new(degree, feature_scale).map_err(fail)?;
            let policy = LinearGaussianPolicy::new(features, sigma, Some(action_bound)).map_err(fail)?;
            let theta0 = Params::zeros(features.dim());
            let eval = MonteCarloEvaluator {
                envs,
                policy: &policy,
                batch: cfg.eval_batch,
                seed: derive_seed(spec.seed, "eval", &[]),
            };
            run_rounds(envs, &policy, &theta0, &fed, &eval).map_err(fail)
        }
        (_, family) => {
            Err(HarnessError::Setup(format!("{} policy does not fit a {} fleet", family.name(), cfg.env_name())))
        }
    }
}

/// Run every spec. With `threads > 1` runs (and the agents inside each run)
/// go onto a dedicated rayon pool; the records are identical either way.
pub fn execute(cfg: &ExperimentConfig, specs: &[RunSpec], threads: usize) -> Result<Vec<RunRecord>, HarnessError> {
    let one = |spec: &RunSpec, par: bool| run_one(cfg, spec, par).map(|log| RunRecord { spec: spec.clone(), log });
    if threads <= 1 {
        return specs.iter().map(|s| one(s, false)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Setup(format!("cannot build thread pool: {e}")))?;
    pool.install(|| specs.par_iter().map(|s| one(s, true)).collect())
}

pub fn runs_csv(cfg: &ExperimentConfig, records: &[RunRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for rec in records {
        let s = &rec.spec;
        for row in &rec.log.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.run_id,
                cfg.algo,
                fmt_float(s.beta),
                fmt_float(s.kappa),
                s.n_agents,
                cfg.local_steps,
                cfg.rounds,
                s.seed,
                row.round,
                fmt_float(row.value),
                fmt_float(row.grad_norm_sq),
                fmt_float(row.wall_ms),
            );
        }
    }
    out
}

/// Write via a temporary sibling and rename, so readers never see a
/// partial file. Missing parent directories are created.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), HarnessError> {
    let err = |source| HarnessError::Output { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "output path has no file name")))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = fs::create_dir_all(dir)
        .and_then(|()| fs::File::create(&tmp))
        .and_then(|mut f| {
            f.write_all(contents.as_bytes())?;
            f.sync_all()
        })
        .and_then(|()| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(err)
}

/// The configured single cell, `repeats` times, written to `cfg.output`.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<RunRecord>, HarnessError> {
    let axes = SweepAxes { beta: vec![cfg.beta], kappa: vec![cfg.kappa], n_agents: vec![cfg.n_agents] };
    let records = execute(cfg, &plan_runs(cfg, &axes), threads)?;
    write_atomic(&cfg.output, &runs_csv(cfg, &records))?;
    Ok(records)
}
