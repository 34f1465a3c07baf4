use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fedpg_harness::experiment::CSV_HEADER;
use fedpg_harness::sweep::{aggregate_path, mean_stderr, AGGREGATE_HEADER};
use fedpg_harness::ExperimentConfig;

const SMALL: &str = "algo = \"fedsvrpg_m\"\nn_agents = 3\nn_states = 3\nn_actions = 2\nhorizon = 6\nlocal_steps = 4\nrounds = 6\nrepeats = 2\nseed = 9\n";

fn fedpg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedpg")).args(args).env_remove("FEDPG_THREADS").output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run_cmd(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    fedpg(&args)
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn without_timing(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        let src = fs::read_to_string(&path).unwrap();
        ExperimentConfig::parse(&src).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 2);
}

#[test]
fn run_writes_schema_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}eval_every = 6\n"));
    let out = dir.path().join("nested/out.csv");
    let o = run_cmd("run", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next(), Some(CSV_HEADER));
    let r = rows(&csv);
    // Two repeats, each evaluated at rounds 0 and R.
    assert_eq!(r.len(), 4);
    let rounds: Vec<&str> = r.iter().map(|f| f[8].as_str()).collect();
    assert_eq!(rounds, ["0", "6", "0", "6"]);
    assert_eq!(r[0][0], "fedsvrpg_m-b0.1-k0-n3-s9");
    assert_eq!(r[2][7], "10");
    for f in &r {
        assert_eq!(f.len(), 12);
        assert_eq!(&f[1], "fedsvrpg_m");
        for x in &f[9..] {
            assert!(x.parse::<f64>().unwrap().is_finite());
        }
    }
    assert!(!aggregate_path(&out).exists());
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL}kappa = 0.7\n[sweep]\nbeta = [0.5, 1.0]\n"));
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    assert!(run_cmd("sweep", &cfg, &a, &[]).status.success());
    assert!(run_cmd("sweep", &cfg, &b, &["--parallel", "4"]).status.success());
    assert!(run_cmd("sweep", &cfg, &c, &["--seed", "10"]).status.success());
    let read = |p: &Path| without_timing(&fs::read_to_string(p).unwrap());
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(fs::read_to_string(aggregate_path(&a)).unwrap(), fs::read_to_string(aggregate_path(&b)).unwrap());
}

#[test]
fn single_cell_sweep_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let run = dir.path().join("run.csv");
    let sweep = dir.path().join("sweep.csv");
    assert!(run_cmd("run", &cfg, &run, &[]).status.success());
    assert!(run_cmd("sweep", &cfg, &sweep, &[]).status.success());
    let read = |p: &Path| without_timing(&fs::read_to_string(p).unwrap());
    assert_eq!(read(&run), read(&sweep));
    let agg = fs::read_to_string(aggregate_path(&sweep)).unwrap();
    assert_eq!(agg.lines().next(), Some(AGGREGATE_HEADER));
    assert_eq!(agg.lines().count(), 2);
}

#[test]
fn aggregate_recomputes_from_raw_rows() {
    let dir = tempfile::tempdir().unwrap();
    let body =
        format!("{SMALL}repeats = 3\n[sweep]\nbeta = [0.1, 1.0]\nkappa = [0.0, 1.0]\n").replace("repeats = 2\n", "");
    let cfg = write(dir.path(), "c.toml", &body);
    let out = dir.path().join("s.csv");
    let o = run_cmd("sweep", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let raw = rows(&fs::read_to_string(&out).unwrap());
    let agg = rows(&fs::read_to_string(aggregate_path(&out)).unwrap());
    assert_eq!(agg.len(), 4);
    for cell in &agg {
        let finals: Vec<&Vec<String>> =
            raw.iter().filter(|f| f[2] == cell[1] && f[3] == cell[2] && f[8] == "6").collect();
        assert_eq!(finals.len(), 3);
        assert_eq!(cell[6], "3");
        for (col, agg_col) in [(9, 7), (10, 9)] {
            let xs: Vec<f64> = finals.iter().map(|f| f[col].parse().unwrap()).collect();
            let (m, se) = mean_stderr(&xs);
            let got_m: f64 = cell[agg_col].parse().unwrap();
            let got_se: f64 = cell[agg_col + 1].parse().unwrap();
            assert!((m - got_m).abs() <= 1e-12 * m.abs().max(1.0));
            assert!((se - got_se).abs() <= 1e-12 * se.abs().max(1.0));
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");

    let bad = write(dir.path(), "bad.toml", "algo = \"fedsvrpg_m\"\nhorizon = 0\n");
    let o = run_cmd("run", &bad, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("horizon") && err.contains("line 2"), "{err}");

    let unknown = write(dir.path(), "unknown.toml", "algo = \"fedsvrpg_m\"\nlocal_stepz = 3\n");
    assert_eq!(run_cmd("run", &unknown, &out, &[]).status.code(), Some(1));
    assert_eq!(run_cmd("run", &dir.path().join("missing.toml"), &out, &[]).status.code(), Some(1));
    assert_eq!(fedpg(&["run"]).status.code(), Some(1));
    assert_eq!(fedpg(&["--help"]).status.code(), Some(0));

    let good = write(dir.path(), "good.toml", SMALL);
    let blocker = write(dir.path(), "file", "");
    let unwritable = blocker.join("o.csv");
    assert_eq!(run_cmd("run", &good, &unwritable, &[]).status.code(), Some(2));

    let v = fedpg(&["validate", "--level", "quick"]);
    assert_eq!(v.status.code(), Some(0));
    let text = String::from_utf8_lossy(&v.stdout);
    assert!(
        text.lines().count() >= 5 && text.lines().all(|l| l.starts_with("CHECK ") && l.contains(" PASS")),
        "{text}"
    );

    let c = fedpg(&["constants", "--config", good.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&c.stdout).contains("warm_batch = "));
}
