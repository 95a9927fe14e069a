//! Bundled reference scenarios and the checks that `compare` applies to
//! their outputs.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value as Json;

use crate::commands::Command;
use crate::error::CliError;
use crate::run::{RunManifest, MANIFEST_FILE, SUMMARY_FILE};

const MANIFEST: &str = include_str!("../acceptance.json");

/// Scenario files shipped with the binary, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("relaxation", include_str!("../scenarios/relaxation.toml")),
    ("thermal", include_str!("../scenarios/thermal.toml")),
    ("spectrum", include_str!("../scenarios/spectrum.toml")),
    ("extinction", include_str!("../scenarios/extinction.toml")),
    ("extinction-sweep", include_str!("../scenarios/extinction-sweep.toml")),
    ("saturation", include_str!("../scenarios/saturation.toml")),
    ("g2", include_str!("../scenarios/g2.toml")),
    ("hom", include_str!("../scenarios/hom.toml")),
    ("raman", include_str!("../scenarios/raman.toml")),
    ("superradiance", include_str!("../scenarios/superradiance.toml")),
    ("spin", include_str!("../scenarios/spin.toml")),
    ("spin-slow-bath", include_str!("../scenarios/spin-slow-bath.toml")),
    ("spin-ramsey", include_str!("../scenarios/spin-ramsey.toml")),
];

pub fn bundled_scenario(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, Deserialize)]
pub struct Check {
    pub label: String,
    /// JSON pointer into the summary.
    pub metric: String,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
}

impl Check {
    /// Closed interval the metric must fall in.
    pub fn bounds(&self) -> (f64, f64) {
        if let Some(v) = self.value {
            let half = self.tol.unwrap_or(0.0).max(self.rel_tol.unwrap_or(0.0) * v.abs());
            (v - half, v + half)
        } else {
            (self.min.unwrap_or(f64::NEG_INFINITY), self.max.unwrap_or(f64::INFINITY))
        }
    }

    fn expectation(&self) -> String {
        match (self.value, self.min, self.max) {
            (Some(v), ..) => {
                let (lo, hi) = self.bounds();
                format!("{v} in [{lo:.6e}, {hi:.6e}]")
            }
            (None, Some(lo), Some(hi)) => format!("in [{lo}, {hi}]"),
            (None, Some(lo), None) => format!(">= {lo}"),
            (None, None, Some(hi)) => format!("<= {hi}"),
            _ => "any".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct Target {
    pub name: String,
    pub command: Command,
    pub scenario: String,
    pub description: String,
    pub checks: Vec<Check>,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    targets: Vec<Target>,
}

pub fn targets() -> Vec<Target> {
    serde_json::from_str::<Manifest>(MANIFEST).expect("embedded acceptance manifest parses").targets
}

pub fn target(name: &str) -> Option<Target> {
    targets().into_iter().find(|t| t.name == name)
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub target: String,
    pub label: String,
    pub metric: String,
    pub observed: Option<f64>,
    pub expected: String,
    pub passed: bool,
    /// Why the check failed, including the presets in force.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub outcomes: Vec<CheckOutcome>,
}

impl Report {
    pub fn passed(&self) -> bool {
        !self.outcomes.is_empty() && self.outcomes.iter().all(|o| o.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            let observed = o.observed.map_or("missing".to_owned(), |x| format!("{x:.6e}"));
            let status = if o.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status} {}: {} ({} = {observed}; expected {})\n", o.target, o.label, o.metric, o.expected));
            if let Some(d) = &o.diagnostic {
                out.push_str(&format!("     {d}\n"));
            }
        }
        let failed = self.outcomes.iter().filter(|o| !o.passed).count();
        out.push_str(&format!("{} checks, {failed} failed\n", self.outcomes.len()));
        out
    }
}

fn metric_value(summary: &Json, pointer: &str) -> Option<f64> {
    match summary.pointer(pointer)? {
        Json::Number(n) => n.as_f64(),
        Json::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
        _ => None,
    }
}

fn read_json(path: &Path) -> Result<Json, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{} is not valid JSON: {e}", path.display()))
}

fn check_target(dir: &Path, t: &Target) -> Vec<CheckOutcome> {
    let fail_all = |reason: String| {
        t.checks
            .iter()
            .map(|c| CheckOutcome {
                target: t.name.clone(),
                label: c.label.clone(),
                metric: c.metric.clone(),
                observed: None,
                expected: c.expectation(),
                passed: false,
                diagnostic: Some(reason.clone()),
            })
            .collect()
    };
    let sub = dir.join(&t.name);
    if !sub.is_dir() {
        return fail_all(format!("no output directory {}", sub.display()));
    }
    let manifest: RunManifest = match read_json(&sub.join(MANIFEST_FILE))
        .and_then(|j| serde_json::from_value(j).map_err(|e| format!("malformed {MANIFEST_FILE}: {e}")))
    {
        Ok(m) => m,
        Err(e) => return fail_all(e),
    };
    if manifest.command != t.command {
        return fail_all(format!("output was produced by `{}`, expected `{}`", manifest.command, t.command));
    }
    let summary = match read_json(&sub.join(SUMMARY_FILE)) {
        Ok(s) => s,
        Err(e) => return fail_all(e),
    };
    let presets = if manifest.presets.is_empty() {
        "none".to_owned()
    } else {
        manifest.presets.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
    };
    t.checks
        .iter()
        .map(|c| {
            let observed = metric_value(&summary, &c.metric);
            let (lo, hi) = c.bounds();
            let passed = observed.is_some_and(|x| x >= lo && x <= hi);
            let diagnostic = (!passed).then(|| match observed {
                None => format!("metric {} absent from summary (presets: {presets})", c.metric),
                Some(x) => format!(
                    "scenario `{}` (presets: {presets}) gave {x:.6e}, outside [{lo:.6e}, {hi:.6e}]",
                    manifest.scenario_name
                ),
            });
            CheckOutcome {
                target: t.name.clone(),
                label: c.label.clone(),
                metric: c.metric.clone(),
                observed,
                expected: c.expectation(),
                passed,
                diagnostic,
            }
        })
        .collect()
}

/// Checks the outputs under `dir/<target>/` against every target, or only
/// `only` when given. Missing outputs count as failures.
pub fn compare(dir: &Path, only: Option<&[String]>) -> Result<Report, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Input(format!("{} is not a directory", dir.display())));
    }
    let empty = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?.next().is_none();
    if empty {
        return Err(CliError::Input(format!("{} is empty; run `sivsim reproduce` first", dir.display())));
    }
    let mut report = Report::default();
    for t in targets() {
        if only.is_some_and(|names| !names.contains(&t.name)) {
            continue;
        }
        report.outcomes.extend(check_target(dir, &t));
    }
    Ok(report)
}
