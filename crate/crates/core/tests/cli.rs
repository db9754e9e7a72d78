use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fractrace::config::{Experiment, RunConfig};
use fractrace::runner::{execute, run, Manifest};

fn fractrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fractrace"))
        .args(args)
        .env_remove("FRACTRACE_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analytic_k1_prints_one_twelfth() {
    let o = fractrace(&["constants", "--which", "K1", "--d", "2", "--alpha", "2", "--analytic"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.08333333333333333");
}

#[test]
fn schedule_prints_a6() {
    let o = fractrace(&["schedule", "--J", "6", "--alpha", "1"]);
    assert!(o.status.success());
    let rows: Vec<Vec<String>> =
        stdout(&o).lines().map(|l| l.split_whitespace().map(String::from).collect()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[4], ["6", "7", "8", "9", "10"]);
    assert_eq!(rows[0], ["2", ".", ".", ".", "."]);
}

#[test]
fn validity_violation_exits_with_named_inequality() {
    let o = fractrace(&["trace", "--alpha", "0.5", "--fit", "--M", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("M < (d+α)/2 violated"));
}

#[test]
fn acceptance_subset_exit_status() {
    let o = fractrace(&["acceptance", "--criteria", "2,3,12"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("[PASS]")).count(), 3);
    let o = fractrace(&["acceptance", "--criteria", "13"]);
    assert_eq!(o.status.code(), Some(2));
}

const CONFIG: &str = "seed = 11\n\n[moments]\nalpha = 1\neta = -0.5,0.2\nn = 200000\n\n[constants.k1]\nwhich = K1\nd = 2\nalpha = 2\nanalytic = true\n\n[schedule]\nformat = csv\nJ = 4\nalpha = 1\n";

fn run_config(root: &Path, extra: &[&str]) -> Output {
    let cfg = root.join("run.conf");
    fs::write(&cfg, CONFIG).unwrap();
    let mut args = vec!["run", "--config", cfg.to_str().unwrap(), "--output", root.to_str().unwrap()];
    args.extend_from_slice(extra);
    fractrace(&args)
}

fn result_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(root).unwrap() {
        let dir = entry.unwrap().path();
        if dir.is_dir() {
            let m: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
            for f in &m.files {
                out.push((m.config_hash.clone(), fs::read(dir.join(f)).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn config_runs_are_reproducible_and_cached() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_config(a.path(), &[]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(run_config(b.path(), &["--no-cache"]).status.success());
    let (fa, fb) = (result_files(a.path()), result_files(b.path()));
    assert_eq!(fa.len(), 3);
    assert_eq!(fa, fb);

    let again = run_config(a.path(), &[]);
    let err = String::from_utf8_lossy(&again.stderr);
    assert_eq!(err.matches("cached").count(), 3, "{err}");
    assert_eq!(stdout(&first), stdout(&again));
}

#[test]
fn manifest_records_effective_parameters() {
    let root = tempfile::tempdir().unwrap();
    let mut rc = RunConfig::new(Experiment::Kernel).param("alpha", 1.5);
    rc.output = Some(root.path().to_path_buf());
    let rec = run(&rc, false).unwrap();
    assert!(!rec.cached);
    let m = &rec.manifest;
    assert_eq!(m.schema_version, 1);
    assert_eq!(m.config_hash, rc.hash());
    assert_eq!(m.seed, rc.seed);
    assert_eq!(m.version, env!("CARGO_PKG_VERSION"));
    for key in ["alpha", "d", "t", "x"] {
        assert!(m.effective_params.contains_key(key), "{key} missing");
    }
    assert!(rec.dir.join("result.json").exists());
}

#[test]
fn cache_conflict_is_a_hard_error() {
    let root = tempfile::tempdir().unwrap();
    let mut rc = RunConfig::new(Experiment::Schedule).param("J", 3).param("alpha", 1);
    rc.output = Some(root.path().to_path_buf());
    let rec = run(&rc, false).unwrap();
    let path = rec.dir.join("manifest.json");
    let mut m: Manifest = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    m.canonical_config.push_str("param.tampered=1\n");
    fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    let err = run(&rc, false).unwrap_err();
    assert!(matches!(err, fractrace::Error::CacheConflict(_)), "{err}");
    assert!(!run(&rc, true).unwrap().cached);
    assert!(run(&rc, false).unwrap().cached);
}

#[test]
fn concurrent_runs_share_one_cache_entry() {
    let root = tempfile::tempdir().unwrap();
    let mut rc = RunConfig::new(Experiment::Moments).param("alpha", 1).param("n", 100000);
    rc.output = Some(root.path().to_path_buf());
    let records: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..4).map(|_| s.spawn(|| run(&rc, false).unwrap())).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(records.iter().all(|r| r.dir == records[0].dir));
    let entries: Vec<_> = fs::read_dir(root.path()).unwrap().collect();
    assert_eq!(entries.len(), 1, "temporary directories left behind");
}

// The documented trace example: leading coefficients meet the criterion
// tolerances (1%, 5%, 10%) for the repulsive unit Gaussian as well.
#[test]
fn trace_fit_example_meets_tolerances() {
    let rc = RunConfig::new(Experiment::Trace).param("alpha", 1).param("potential", "gaussian:c=1,s=1").param("fit", true);
    let out = execute(&rc).unwrap();
    assert_eq!(out.result["gates"]["grid"]["passed"], true);
    assert_eq!(out.result["gates"]["domain"]["passed"], true);
    let rows = out.result["fit_table"]["rows"].as_array().unwrap();
    for (row, tol) in rows.iter().zip([0.01, 0.05, 0.10]) {
        let (c, r) = (row[1].as_f64().unwrap(), row[5].as_f64().unwrap());
        assert!(((c - r) / r).abs() < tol, "{c} vs {r}");
    }
}
