//! Human- and machine-readable reports of a manifest.

use std::fmt::Write;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

use crate::manifest::{CheckItem, Comparison, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// No items were run.
    Empty,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

pub fn status(m: &RunManifest) -> Status {
    if m.items().next().is_none() {
        Status::Empty
    } else if m.pass() {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Process exit code for a finished run. An empty run is not a pass.
pub fn exit_code(m: &RunManifest) -> i32 {
    match status(m) {
        Status::Pass => EXIT_PASS,
        Status::Fail | Status::Empty => EXIT_FAIL,
    }
}

fn describe(i: &CheckItem) -> String {
    match i.comparison {
        Comparison::Within => format!("{:.6e} ~ {:.6e} ± {:.3e}", i.measured, i.target, i.tolerance),
        c => format!("{:.6e} {} {:.6e}", i.measured, c.symbol(), i.target),
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    tool_version: &'a str,
    status: Status,
    passed: usize,
    failed: usize,
    suites: Vec<JsonSuite<'a>>,
}

#[derive(Serialize)]
struct JsonSuite<'a> {
    suite: &'a str,
    kappa: f64,
    pass: bool,
    items: &'a [CheckItem],
}

pub fn emit_report(m: &RunManifest, format: Format) -> String {
    let passed = m.items().filter(|i| i.pass).count();
    let failed = m.items().count() - passed;
    match format {
        Format::Text => {
            let mut out = String::new();
            for s in &m.suites {
                let _ = writeln!(out, "[{}] kappa = {}", s.suite, s.kappa);
                for i in &s.items {
                    let mark = if i.pass { "PASS" } else { "FAIL" };
                    let _ = writeln!(out, "  {mark} C{} {}: {}", i.criterion, i.name, describe(i));
                }
            }
            let st = match status(m) {
                Status::Pass => "pass",
                Status::Fail => "fail",
                Status::Empty => "empty (no items)",
            };
            let _ = writeln!(out, "{passed} passed, {failed} failed: {st}");
            out
        }
        Format::Json => {
            let doc = JsonReport {
                tool_version: &m.tool_version,
                status: status(m),
                passed,
                failed,
                suites: m
                    .suites
                    .iter()
                    .map(|s| JsonSuite {
                        suite: s.suite.name(),
                        kappa: s.kappa,
                        pass: s.pass(),
                        items: &s.items,
                    })
                    .collect(),
            };
            serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
        }
    }
}

/// Structural check of a JSON report.
pub fn validate_json_report(v: &Value) -> Result<(), String> {
    let obj = v.as_object().ok_or("report is not an object")?;
    let field = |o: &serde_json::Map<String, Value>, k: &str| o.get(k).cloned().ok_or(format!("missing {k}"));
    field(obj, "tool_version")?.as_str().ok_or("tool_version is not a string")?;
    let st = field(obj, "status")?;
    if !matches!(st.as_str(), Some("pass" | "fail" | "empty")) {
        return Err(format!("bad status {st}"));
    }
    let passed = field(obj, "passed")?.as_u64().ok_or("passed is not an integer")?;
    let failed = field(obj, "failed")?.as_u64().ok_or("failed is not an integer")?;
    let suites = field(obj, "suites")?;
    let suites = suites.as_array().ok_or("suites is not an array")?;
    let mut count = [0u64; 2];
    for s in suites {
        let s = s.as_object().ok_or("suite is not an object")?;
        field(s, "suite")?.as_str().ok_or("suite name is not a string")?;
        field(s, "kappa")?.as_f64().ok_or("kappa is not a number")?;
        field(s, "pass")?.as_bool().ok_or("pass is not a bool")?;
        for i in field(s, "items")?.as_array().ok_or("items is not an array")? {
            let i = i.as_object().ok_or("item is not an object")?;
            field(i, "criterion")?.as_u64().ok_or("criterion is not an integer")?;
            field(i, "name")?.as_str().ok_or("name is not a string")?;
            for k in ["measured", "target", "tolerance"] {
                let x = field(i, k)?;
                if !(x.is_number() || x.is_null()) {
                    return Err(format!("{k} is not a number"));
                }
            }
            field(i, "comparison")?.as_str().ok_or("comparison is not a string")?;
            let ok = field(i, "pass")?.as_bool().ok_or("pass is not a bool")?;
            count[ok as usize] += 1;
        }
    }
    if count[1] != passed || count[0] != failed {
        return Err("pass/fail counts disagree with items".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Suite;
    use crate::manifest::{SuiteResult, TOOL_VERSION};

    fn manifest(items: Vec<CheckItem>) -> RunManifest {
        RunManifest {
            config: None,
            tool_version: TOOL_VERSION.into(),
            wall_time_s: 0.0,
            suites: vec![SuiteResult {
                suite: Suite::Malthus,
                kappa: 3.0,
                items,
            }],
            files: vec![],
        }
    }

    #[test]
    fn empty_is_not_a_pass() {
        let m = manifest(vec![]);
        assert_eq!(status(&m), Status::Empty);
        assert_ne!(exit_code(&m), EXIT_PASS);
        assert!(emit_report(&m, Format::Text).contains("0 passed, 0 failed"));
    }

    #[test]
    fn one_failure_fails() {
        let m = manifest(vec![
            CheckItem::within(6, "root", 1.83, 1.8333, 0.03),
            CheckItem::at_most(6, "se", 0.5, 0.02),
        ]);
        assert_eq!(exit_code(&m), EXIT_FAIL);
        let text = emit_report(&m, Format::Text);
        assert!(text.contains("PASS C6 root") && text.contains("FAIL C6 se"));
    }

    #[test]
    fn json_validates() {
        let m = manifest(vec![
            CheckItem::within(6, "root", 1.83, 1.8333, 0.03),
            CheckItem::at_least(6, "nan", f64::NAN, 0.0),
        ]);
        let v: Value = serde_json::from_str(&emit_report(&m, Format::Json)).unwrap();
        validate_json_report(&v).unwrap();
        assert_eq!(v["failed"], 1);
        let mut broken = v.clone();
        broken["passed"] = Value::from(2);
        assert!(validate_json_report(&broken).is_err());
    }
}
