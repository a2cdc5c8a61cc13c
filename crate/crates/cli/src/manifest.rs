//! Check items and the per-run manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Suite};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// |measured − target| ≤ tolerance.
    Within,
    /// measured ≤ target.
    AtMost,
    /// measured ≥ target.
    AtLeast,
    /// measured < target.
    Below,
    /// measured > target.
    Above,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Within => "~",
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
            Comparison::Below => "<",
            Comparison::Above => ">",
        }
    }
}

/// One acceptance check with its measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    /// Acceptance criterion the item belongs to.
    pub criterion: u8,
    pub name: String,
    pub measured: f64,
    pub comparison: Comparison,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckItem {
    pub fn within(criterion: u8, name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        Self {
            criterion,
            name: name.into(),
            measured,
            comparison: Comparison::Within,
            target,
            tolerance,
            pass: (measured - target).abs() <= tolerance,
        }
    }

    pub fn at_most(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            criterion,
            name: name.into(),
            measured,
            comparison: Comparison::AtMost,
            target: bound,
            tolerance: 0.0,
            pass: measured <= bound,
        }
    }

    pub fn at_least(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            criterion,
            name: name.into(),
            measured,
            comparison: Comparison::AtLeast,
            target: bound,
            tolerance: 0.0,
            pass: measured >= bound,
        }
    }

    pub fn below(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            comparison: Comparison::Below,
            pass: measured < bound,
            ..Self::at_most(criterion, name, measured, bound)
        }
    }

    pub fn above(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            comparison: Comparison::Above,
            pass: measured > bound,
            ..Self::at_least(criterion, name, measured, bound)
        }
    }

    /// A yes/no property, recorded as 1 or 0 against a target of 1.
    pub fn holds(criterion: u8, name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(criterion, name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub kappa: f64,
    pub items: Vec<CheckItem>,
}

impl SuiteResult {
    pub fn pass(&self) -> bool {
        !self.items.is_empty() && self.items.iter().all(|i| i.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(dir: &Path, rel: &str) -> std::io::Result<Self> {
        let data = fs::read(dir.join(rel))?;
        Ok(Self {
            path: rel.to_string(),
            sha256: hex::encode(Sha256::digest(&data)),
            bytes: data.len() as u64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: Option<ExperimentConfig>,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub suites: Vec<SuiteResult>,
    pub files: Vec<FileDigest>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn items(&self) -> impl Iterator<Item = &CheckItem> {
        self.suites.iter().flat_map(|s| s.items.iter())
    }

    /// True when there is at least one item and every item passes.
    pub fn pass(&self) -> bool {
        self.items().next().is_some() && self.items().all(|i| i.pass)
    }

    /// Checks that every referenced file exists under `dir` with the
    /// recorded digest.
    pub fn verify(&self, dir: &Path) -> Result<(), String> {
        for f in &self.files {
            let now = FileDigest::of(dir, &f.path).map_err(|e| format!("{}: {e}", f.path))?;
            if now != *f {
                return Err(format!("{}: digest mismatch", f.path));
            }
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(dir.join(MANIFEST_FILE), text + "\n")
    }

    pub fn read(dir: &Path) -> std::io::Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}
