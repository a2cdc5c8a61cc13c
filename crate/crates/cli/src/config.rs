//! Experiment configuration, read from TOML.

use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use frag_core::relations::{KAPPA_MAX, KAPPA_MIN};
use frag_core::{derive_relations, BranchPolicy, RatesMode, Variant};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    RelationsSweep,
    StableChecks,
    DiskChecks,
    TreeMartingales,
    Malthus,
    Measure,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::RelationsSweep,
        Suite::StableChecks,
        Suite::DiskChecks,
        Suite::TreeMartingales,
        Suite::Malthus,
        Suite::Measure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::RelationsSweep => "relations-sweep",
            Suite::StableChecks => "stable-checks",
            Suite::DiskChecks => "disk-checks",
            Suite::TreeMartingales => "tree-martingales",
            Suite::Malthus => "malthus",
            Suite::Measure => "measure",
        }
    }

    /// Whether the suite accepts zero replicates.
    fn analytic_ok(self) -> bool {
        matches!(self, Suite::RelationsSweep | Suite::Malthus)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    Policy,
    ChordalLeft,
    ChordalRight,
}

impl From<ModeChoice> for RatesMode {
    fn from(m: ModeChoice) -> Self {
        match m {
            ModeChoice::Policy => RatesMode::Policy,
            ModeChoice::ChordalLeft => RatesMode::ChordalLeft,
            ModeChoice::ChordalRight => RatesMode::ChordalRight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum VariantChoice {
    #[serde(rename = "T")]
    #[value(name = "T")]
    T,
    #[serde(rename = "Ttilde")]
    #[value(name = "Ttilde")]
    TTilde,
}

impl From<VariantChoice> for Variant {
    fn from(v: VariantChoice) -> Self {
        match v {
            VariantChoice::T => Variant::T,
            VariantChoice::TTilde => Variant::TTilde,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyChoice {
    FollowLargest,
    QWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    #[serde(default = "defaults::kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "defaults::a_lm")]
    pub a_lm: f64,
    #[serde(default = "defaults::mode")]
    pub mode: ModeChoice,
    #[serde(default = "defaults::variant")]
    pub variant: VariantChoice,
    #[serde(default = "defaults::policy")]
    pub policy: PolicyChoice,
    /// Exponent of the q-weighted policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy_q: Option<f64>,
    #[serde(default = "defaults::horizon")]
    pub horizon: f64,
    /// Mass floor of the trees and lower bound of disk paths.
    #[serde(default = "defaults::floor")]
    pub floor: f64,
    /// Absolute jump cutoff.
    #[serde(default = "defaults::cutoff")]
    pub cutoff: f64,
    /// Relative jump cutoff of the disk engine.
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    #[serde(default = "defaults::replicates")]
    pub replicates: u64,
    #[serde(default = "defaults::master_seed")]
    pub master_seed: u64,
    #[serde(default = "defaults::out_dir")]
    pub out_dir: PathBuf,
}

mod defaults {
    use super::*;

    pub fn kappa() -> f64 {
        3.0
    }
    pub fn a_lm() -> f64 {
        1.0
    }
    pub fn mode() -> ModeChoice {
        ModeChoice::Policy
    }
    pub fn variant() -> VariantChoice {
        VariantChoice::T
    }
    pub fn policy() -> PolicyChoice {
        PolicyChoice::FollowLargest
    }
    pub fn horizon() -> f64 {
        1.0
    }
    pub fn floor() -> f64 {
        1.0 / 64.0
    }
    pub fn cutoff() -> f64 {
        0.01
    }
    pub fn eta() -> f64 {
        frag_core::explore::DEFAULT_ETA
    }
    pub fn replicates() -> u64 {
        10_000
    }
    pub fn master_seed() -> u64 {
        42
    }
    pub fn out_dir() -> PathBuf {
        PathBuf::from("out")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Fields(Vec<FieldError>),
}

impl ExperimentConfig {
    pub fn new(suite: Suite) -> Self {
        Self {
            suite,
            kappa: defaults::kappa(),
            beta: 0.0,
            a_lm: defaults::a_lm(),
            mode: defaults::mode(),
            variant: defaults::variant(),
            policy: defaults::policy(),
            policy_q: None,
            horizon: defaults::horizon(),
            floor: defaults::floor(),
            cutoff: defaults::cutoff(),
            eta: defaults::eta(),
            replicates: defaults::replicates(),
            master_seed: defaults::master_seed(),
            out_dir: defaults::out_dir(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut bad = |field: &'static str, message: String| errs.push(FieldError { field, message });
        if !(self.kappa > KAPPA_MIN && self.kappa < KAPPA_MAX) {
            bad("kappa", format!("{} is outside (8/3, 4)", self.kappa));
        }
        if !(-1.0..=1.0).contains(&self.beta) {
            bad("beta", format!("{} is outside [-1, 1]", self.beta));
        }
        if !(self.a_lm > 0.0 && self.a_lm.is_finite()) {
            bad("a_lm", format!("{} must be positive and finite", self.a_lm));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            bad("horizon", format!("{} must be positive and finite", self.horizon));
        }
        if !(self.floor > 0.0 && self.floor < 1.0) {
            bad("floor", format!("{} is outside (0, 1)", self.floor));
        }
        if !(self.cutoff > 0.0) {
            bad("cutoff", format!("{} must be positive", self.cutoff));
        }
        if !(self.eta > 0.0 && self.eta <= 0.25) {
            bad("eta", format!("{} is outside (0, 1/4]", self.eta));
        }
        if self.replicates == 0 && !self.suite.analytic_ok() {
            bad("replicates", format!("suite {} needs at least one replicate", self.suite));
        }
        match (self.policy, self.policy_q) {
            (PolicyChoice::QWeighted, None) => {
                bad("policy_q", "required by the q-weighted policy".into());
            }
            (PolicyChoice::QWeighted, Some(q)) => {
                let alpha = 4.0 / self.kappa;
                if !(q > alpha && q.is_finite()) {
                    bad("policy_q", format!("{q} must exceed alpha = {alpha}"));
                }
            }
            (PolicyChoice::FollowLargest, Some(_)) => {
                bad("policy_q", "only meaningful with policy = \"q-weighted\"".into());
            }
            (PolicyChoice::FollowLargest, None) => {}
        }
        let tree_suite = matches!(
            self.suite,
            Suite::DiskChecks | Suite::TreeMartingales | Suite::Malthus | Suite::Measure
        );
        if tree_suite && self.mode != ModeChoice::Policy {
            bad("mode", format!("suite {} runs in policy mode only", self.suite));
        }
        if self.master_seed > i64::MAX as u64 {
            bad("master_seed", format!("{} does not fit a TOML integer", self.master_seed));
        }
        if self.out_dir.as_os_str().is_empty() {
            bad("out_dir", "must not be empty".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Fields(errs))
        }
    }

    pub fn relations(&self) -> frag_core::KappaRelations {
        derive_relations(self.kappa).expect("validated kappa")
    }

    pub fn branch_policy(&self) -> BranchPolicy {
        match self.policy {
            PolicyChoice::FollowLargest => BranchPolicy::FollowLargest,
            PolicyChoice::QWeighted => BranchPolicy::QWeighted(self.policy_q.unwrap_or(f64::NAN)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::new(Suite::Measure);
        cfg.kappa = 3.5;
        cfg.beta = -0.25;
        cfg.floor = 2f64.powi(-8);
        cfg.policy = PolicyChoice::QWeighted;
        cfg.policy_q = Some(1.9);
        cfg.master_seed = i64::MAX as u64;
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_toml("suite = \"malthus\"").unwrap();
        assert_eq!(cfg, ExperimentConfig::new(Suite::Malthus));
    }

    #[test]
    fn field_errors_are_named() {
        let err = ExperimentConfig::from_toml("suite = \"measure\"\nkappa = 5.0\neta = 0.5\nreplicates = 0")
            .unwrap_err();
        let ConfigError::Fields(errs) = err else { panic!("{err}") };
        let fields: Vec<_> = errs.iter().map(|e| e.field).collect();
        assert_eq!(fields, ["kappa", "eta", "replicates"]);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(matches!(
            ExperimentConfig::from_toml("suite = \"malthus\"\nkapa = 3.0"),
            Err(ConfigError::Parse(_))
        ));
    }
}
