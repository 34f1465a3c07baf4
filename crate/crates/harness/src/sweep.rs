//! `β × κ × N` sweeps with a per-cell aggregate of the final objective.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::experiment::{execute, fmt_float, plan_runs, runs_csv, write_atomic, RunRecord};

pub const AGGREGATE_HEADER: &str = "algo,beta,kappa,n_agents,local_steps,rounds,runs,\
mean_final_J,stderr_final_J,mean_final_grad_norm_sq,stderr_final_grad_norm_sq";

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub beta: f64,
    pub kappa: f64,
    pub n_agents: usize,
    pub runs: usize,
    pub mean_final_j: f64,
    pub stderr_final_j: f64,
    pub mean_final_grad_norm_sq: f64,
    pub stderr_final_grad_norm_sq: f64,
}

/// Sample mean and standard error `s/√n` (with `n − 1` in the variance);
/// the error is zero for a single value.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

type CellKey = (u64, u64, usize);

/// Group records by cell, keeping the order in which cells first appear.
pub fn aggregate(records: &[RunRecord]) -> Vec<CellSummary> {
    let mut cells: Vec<(CellKey, Vec<&RunRecord>)> = Vec::new();
    for rec in records {
        let key = (rec.spec.beta.to_bits(), rec.spec.kappa.to_bits(), rec.spec.n_agents);
        match cells.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(rec),
            None => cells.push((key, vec![rec])),
        }
    }
    cells
        .into_iter()
        .map(|(_, recs)| {
            let last = |f: fn(&RunRecord) -> f64| recs.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (mj, sj) = mean_stderr(&last(|r| r.log.summary.final_value));
            let (mg, sg) = mean_stderr(&last(|r| r.log.rows.last().map_or(f64::NAN, |row| row.grad_norm_sq)));
            CellSummary {
                beta: recs[0].spec.beta,
                kappa: recs[0].spec.kappa,
                n_agents: recs[0].spec.n_agents,
                runs: recs.len(),
                mean_final_j: mj,
                stderr_final_j: sj,
                mean_final_grad_norm_sq: mg,
                stderr_final_grad_norm_sq: sg,
            }
        })
        .collect()
}

pub fn aggregate_csv(cfg: &ExperimentConfig, cells: &[CellSummary]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            cfg.algo,
            fmt_float(c.beta),
            fmt_float(c.kappa),
            c.n_agents,
            cfg.local_steps,
            cfg.rounds,
            c.runs,
            fmt_float(c.mean_final_j),
            fmt_float(c.stderr_final_j),
            fmt_float(c.mean_final_grad_norm_sq),
            fmt_float(c.stderr_final_grad_norm_sq),
        );
    }
    out
}

/// `results.csv` → `results_aggregate.csv`, next to the raw file.
pub fn aggregate_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map_or_else(|| "results".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}_aggregate.csv"))
}

pub struct SweepOutput {
    pub records: Vec<RunRecord>,
    pub cells: Vec<CellSummary>,
}

/// Every cell of the sweep axes (the single configured cell when the config
/// has none). Raw rows go to `cfg.output`, the aggregate next to it.
pub fn run_sweep(cfg: &ExperimentConfig, threads: usize) -> Result<SweepOutput, HarnessError> {
    let records = execute(cfg, &plan_runs(cfg, &cfg.axes()), threads)?;
    let cells = aggregate(&records);
    write_atomic(&cfg.output, &runs_csv(cfg, &records))?;
    write_atomic(&aggregate_path(&cfg.output), &aggregate_csv(cfg, &cells))?;
    Ok(SweepOutput { records, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[7.0]), (7.0, 0.0));
        assert!(mean_stderr(&[]).0.is_nan());
    }

    #[test]
    fn aggregate_file_name() {
        assert_eq!(aggregate_path(Path::new("out/r.csv")), PathBuf::from("out/r_aggregate.csv"));
        assert_eq!(aggregate_path(Path::new("r")), PathBuf::from("r_aggregate.csv"));
    }
}
