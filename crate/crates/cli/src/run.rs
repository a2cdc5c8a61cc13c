//! Running one suite, and the full acceptance battery.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ExperimentConfig, Suite};
use crate::manifest::{CheckItem, FileDigest, RunManifest, SuiteResult, MANIFEST_FILE, TOOL_VERSION};
use crate::suites::{run_suite, Output};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0:#}")]
    Internal(#[from] anyhow::Error),
}

/// Runs the configured suite into `config.out_dir` and writes its
/// manifest. Files written by a failed run are removed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest, RunError> {
    config.validate()?;
    let dir = &config.out_dir;
    let created = !dir.exists();
    fs::create_dir_all(dir).map_err(|e| anyhow::anyhow!("creating {}: {e}", dir.display()))?;
    let start = Instant::now();
    let mut out = Output::new(dir);
    let result = run_suite(config, &mut out).and_then(|items| {
        let files = out
            .files()
            .iter()
            .map(|f| FileDigest::of(dir, f))
            .collect::<std::io::Result<Vec<_>>>()?;
        let manifest = RunManifest {
            config: Some(config.clone()),
            tool_version: TOOL_VERSION.to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
            suites: vec![SuiteResult {
                suite: config.suite,
                kappa: config.kappa,
                items,
            }],
            files,
        };
        manifest.write(dir)?;
        Ok(manifest)
    });
    match result {
        Ok(m) => Ok(m),
        Err(e) => {
            out.remove_all();
            let _ = fs::remove_file(dir.join(MANIFEST_FILE));
            if created {
                let _ = fs::remove_dir(dir);
            }
            Err(RunError::Internal(e))
        }
    }
}

/// The acceptance battery at a master seed; `out_dir` fields are relative
/// to the check directory.
pub fn battery(seed: u64) -> Vec<ExperimentConfig> {
    let mk = |suite: Suite, kappa: f64, replicates: u64| {
        let mut c = ExperimentConfig::new(suite);
        c.kappa = kappa;
        c.replicates = replicates;
        c.master_seed = seed;
        c.out_dir = PathBuf::from(format!("{}-k{kappa}", suite.name()));
        c
    };
    let mut runs = Vec::new();
    for k in [2.7, 3.0, 3.5, 3.99] {
        runs.push(mk(Suite::RelationsSweep, k, 0));
    }
    let mut stable = mk(Suite::StableChecks, 3.0, 200_000);
    stable.cutoff = 0.05;
    runs.push(stable);
    runs.push(mk(Suite::DiskChecks, 3.0, 100_000));
    for k in [3.0, 3.5] {
        runs.push(mk(Suite::TreeMartingales, k, 10_000));
    }
    for (k, n) in [(2.8, 0), (3.0, 10_000), (3.5, 10_000), (3.9, 0)] {
        runs.push(mk(Suite::Malthus, k, n));
    }
    let mut measure = mk(Suite::Measure, 3.0, 10_000);
    measure.floor = 2f64.powi(-8);
    runs.push(measure);
    runs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub criterion: u8,
    pub pass: bool,
    pub items: Vec<(String, CheckItem)>,
}

/// Deterministic summary of a battery, written as `check.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
}

impl CheckSummary {
    pub fn pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }
}

pub const CHECK_FILE: &str = "check.json";
/// Criteria evaluated by a single battery run.
pub const BATTERY_CRITERIA: std::ops::RangeInclusive<u8> = 1..=10;

/// Runs the battery into subdirectories of `out_dir`; writes `check.json`
/// and a manifest over every artifact.
pub fn run_check(seed: u64, out_dir: &Path, mut progress: impl FnMut(&ExperimentConfig, f64)) -> Result<(CheckSummary, RunManifest), RunError> {
    fs::create_dir_all(out_dir).map_err(|e| anyhow::anyhow!("creating {}: {e}", out_dir.display()))?;
    let start = Instant::now();
    let mut suites = Vec::new();
    let mut files = Vec::new();
    let mut tagged: Vec<(String, CheckItem)> = Vec::new();
    for mut cfg in battery(seed) {
        let sub = cfg.out_dir.clone();
        cfg.out_dir = out_dir.join(&sub);
        let t0 = Instant::now();
        let m = run_experiment(&cfg)?;
        progress(&cfg, t0.elapsed().as_secs_f64());
        let tag = sub.display().to_string();
        for f in &m.files {
            files.push(FileDigest {
                path: format!("{tag}/{}", f.path),
                ..f.clone()
            });
        }
        for s in m.suites {
            tagged.extend(s.items.iter().map(|i| (tag.clone(), i.clone())));
            suites.push(s);
        }
    }
    let criteria = BATTERY_CRITERIA
        .map(|c| {
            let items: Vec<_> = tagged.iter().filter(|(_, i)| i.criterion == c).cloned().collect();
            CriterionResult {
                criterion: c,
                pass: !items.is_empty() && items.iter().all(|(_, i)| i.pass),
                items,
            }
        })
        .collect();
    let summary = CheckSummary { seed, criteria };
    let text = serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?;
    fs::write(out_dir.join(CHECK_FILE), text + "\n").map_err(anyhow::Error::from)?;
    files.push(FileDigest::of(out_dir, CHECK_FILE).map_err(anyhow::Error::from)?);
    let manifest = RunManifest {
        config: None,
        tool_version: TOOL_VERSION.to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        suites,
        files,
    };
    manifest.write(out_dir).map_err(anyhow::Error::from)?;
    Ok((summary, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_config_creates_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(Suite::Measure);
        cfg.out_dir = dir.path().join("fresh");
        cfg.eta = 0.5;
        assert!(matches!(run_experiment(&cfg), Err(RunError::Config(_))));
        assert!(!cfg.out_dir.exists());
    }

    #[test]
    fn failed_run_removes_partial_outputs() {
        let dir = tempfile::tempdir().unwrap();
        // The manifest cannot be written over a directory.
        fs::create_dir(dir.path().join(MANIFEST_FILE)).unwrap();
        let mut cfg = ExperimentConfig::new(Suite::RelationsSweep);
        cfg.out_dir = dir.path().to_path_buf();
        assert!(matches!(run_experiment(&cfg), Err(RunError::Internal(_))));
        assert!(!dir.path().join("relations.csv").exists());
    }

    #[test]
    fn relations_sweep_example() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(Suite::RelationsSweep);
        cfg.out_dir = dir.path().to_path_buf();
        let m = run_experiment(&cfg).unwrap();
        assert!(m.pass());
        m.verify(dir.path()).unwrap();
        let mut rdr = csv::Reader::from_path(dir.path().join("relations.csv")).unwrap();
        let col = rdr.headers().unwrap().iter().position(|h| h == "mean_ratio").unwrap();
        let rows: Vec<f64> = rdr.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
        assert_eq!(rows.len(), 201);
        assert!(rows.iter().all(|v| (v - 0.5).abs() < 1e-9));
    }
}
