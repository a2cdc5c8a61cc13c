//! The binary end to end: exit codes, seeds and output files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use frag_cli::report::validate_json_report;
use frag_cli::RunManifest;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_frag-explore"));
    c.env_remove("FRAG_EXPLORE_SEED");
    c
}

fn run(c: &mut Command) -> Output {
    c.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn relations_prints_the_exponents() {
    let o = run(bin().args(["relations", "--kappa", "3", "--beta", "0"]));
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["relations"]["alpha"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-15);
    assert!((v["relations"]["u"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert!((v["split"]["rho_prime"].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn config_errors_exit_with_2() {
    let o = run(bin().args(["relations", "--kappa", "4"]));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("kappa"));
    assert_eq!(code(&run(bin().arg("run"))), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "suite = \"measure\"\neta = 0.5\n").unwrap();
    let o = run(bin().arg("--config").arg(&cfg).arg("run"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("eta"));
    fs::write(&cfg, "suite = \"measure\"\nkapa = 3.0\n").unwrap();
    assert_eq!(code(&run(bin().arg("--config").arg(&cfg).arg("run"))), 2);

    let o = run(bin().env("FRAG_EXPLORE_SEED", "not-a-seed").args(["relations"]));
    assert_eq!(code(&o), 2);
}

#[test]
fn unwritable_output_is_an_internal_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "").unwrap();
    let o = run(bin().arg("--out-dir").arg(file.join("sub")).args(["sample-disk"]));
    assert_eq!(code(&o), 3);
}

fn disk_csv(dir: &Path, extra: &[(&str, &str)], args: &[&str]) -> String {
    let mut c = bin();
    for (k, v) in extra {
        c.env(k, v);
    }
    let o = run(c.arg("--out-dir").arg(dir).args(["sample-disk", "--horizon", "0.5"]).args(args));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(dir.join("disk_path.csv")).unwrap()
}

#[test]
fn sample_disk_writes_events() {
    let dir = tempfile::tempdir().unwrap();
    let text = disk_csv(dir.path(), &[], &["--seed", "3"]);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "time,pre_state,size,sign,side,kind,post_state");
    assert!(lines.count() > 0);
    let text = disk_csv(dir.path(), &[], &["--seed", "3", "--mode", "chordal-left", "--beta", "0.5"]);
    assert!(text.starts_with("time,pre_state,size,sign,side,kind,post_state"));
}

#[test]
fn environment_seed_wins() {
    let dir = tempfile::tempdir().unwrap();
    let a = disk_csv(dir.path(), &[], &["--seed", "5"]);
    let b = disk_csv(dir.path(), &[("FRAG_EXPLORE_SEED", "5")], &["--seed", "1"]);
    let c = disk_csv(dir.path(), &[], &["--seed", "1"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn grow_tree_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin().arg("--out-dir").arg(dir.path()).args(["grow-tree", "--exit", "--variant", "Ttilde"]));
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("tree.json")).unwrap()).unwrap();
    assert_eq!(v["variant"], "Ttilde");
    assert!(!v["particles"].as_array().unwrap().is_empty());
}

#[test]
fn malthus_without_replicates_is_analytic() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin().arg("--out-dir").arg(dir.path()).args(["malthus", "--kappa", "2.8", "--replicates", "0"]));
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let delta = v["delta"].as_f64().unwrap();
    assert!((v["root"].as_f64().unwrap() - delta).abs() < 5e-3);
    RunManifest::read(dir.path()).unwrap().verify(dir.path()).unwrap();
}

#[test]
fn run_reports_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, "suite = \"relations-sweep\"\nkappa = 3.5\nreplicates = 0\n").unwrap();
    let out = dir.path().join("out");
    let o = run(bin().arg("--config").arg(&cfg).arg("--out-dir").arg(&out).args(["run", "--format", "json"]));
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate_json_report(&v).unwrap();
    assert_eq!(v["status"], "pass");
    let m = RunManifest::read(&out).unwrap();
    m.verify(&out).unwrap();
    assert_eq!(m.files.len(), 1);
}

#[test]
fn runs_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("malthus.toml");
    fs::write(&cfg, "suite = \"malthus\"\nreplicates = 2000\n").unwrap();
    let digest = |threads: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = run(bin()
            .arg("--config")
            .arg(&cfg)
            .arg("--out-dir")
            .arg(&out)
            .args(["--threads", threads, "run"]));
        assert!(matches!(code(&o), 0 | 1));
        RunManifest::read(&out).unwrap().files
    };
    assert_eq!(digest("1", "a"), digest("4", "b"));
}
