//! Executes a scenario: sweep points in a worker pool, artifacts written by
//! one collector.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::commands::{self, describe_error, Command, Output, Seeds};
use crate::config::Scenario;
use crate::error::CliError;
use crate::table::Table;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub scenario_name: String,
    pub scenario_hash: String,
    pub tool_version: String,
    pub timestamp: String,
    pub seed: u64,
    pub presets: BTreeMap<String, String>,
    pub resolved_parameters: Json,
    pub sweeps: Json,
    pub outputs: Vec<OutputFile>,
}

/// Directory used when neither `--out` nor the scenario names one.
pub fn default_out_dir(scenario: &Scenario, command: Command) -> PathBuf {
    scenario.output.clone().unwrap_or_else(|| {
        let name = if scenario.name.is_empty() { "scenario" } else { scenario.name.as_str() };
        PathBuf::from("out").join(format!("{name}-{command}"))
    })
}

/// Runs every sweep point. Results come back in point order regardless of
/// the number of workers.
pub fn evaluate(command: Command, scenario: &Scenario, jobs: usize) -> Result<(Vec<Table>, Json), CliError> {
    let hash = scenario.hash();
    let points = scenario.sweep_points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Input(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<Output, String>> = pool.install(|| {
        points
            .par_iter()
            .map(|pt| {
                commands::run(command, &pt.params, &Seeds::new(&hash, scenario.seed, pt.index))
                    .map_err(|e| describe_error(command, pt.index, &pt.assignments, &e))
            })
            .collect()
    });
    let outputs: Vec<Output> = results.into_iter().collect::<Result<_, _>>().map_err(CliError::Physics)?;

    if scenario.sweeps.is_empty() {
        let out = outputs.into_iter().next().expect("one point without sweeps");
        return Ok((out.tables, out.summary));
    }
    let mut tables: Vec<Table> = Vec::new();
    let mut summaries = Vec::with_capacity(outputs.len());
    for (pt, out) in points.iter().zip(outputs) {
        let prefix: Vec<(String, String, f64)> = pt
            .assignments
            .iter()
            .map(|(path, v)| {
                let unit = crate::config::spec(path).map_or("", |s| match s.kind {
                    crate::config::Kind::Quantity(d) => d.base_unit(),
                    _ => "",
                });
                (path.clone(), if unit == "1" { String::new() } else { unit.to_owned() }, *v)
            })
            .collect();
        for t in out.tables {
            let t = t.with_prefix(&prefix);
            match tables.iter_mut().find(|x| x.name == t.name) {
                Some(acc) => acc.rows.extend(t.rows),
                None => tables.push(t),
            }
        }
        let sweep: serde_json::Map<String, Json> = pt.assignments.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        summaries.push(json!({ "index": pt.index, "sweep": sweep, "summary": out.summary }));
    }
    Ok((tables, json!({ "points": summaries })))
}

fn write(dir: &Path, file: &str, contents: &[u8]) -> Result<OutputFile, CliError> {
    let path = dir.join(file);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(OutputFile { file: file.to_owned(), sha256: hex::encode(Sha256::digest(contents)), bytes: contents.len() as u64 })
}

/// Runs `command` and writes CSV tables, `summary.json` and
/// `manifest.json` into `out_dir`.
pub fn run_scenario(command: Command, scenario: &Scenario, out_dir: &Path, jobs: usize) -> Result<RunManifest, CliError> {
    let (tables, summary) = evaluate(command, scenario, jobs)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut outputs = Vec::with_capacity(tables.len() + 1);
    for t in &tables {
        log::info!("writing {} ({} rows)", t.name, t.rows.len());
        outputs.push(write(out_dir, &format!("{}.csv", t.name), t.to_csv().as_bytes())?);
    }
    let summary_text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    outputs.push(write(out_dir, SUMMARY_FILE, summary_text.as_bytes())?);

    let manifest = RunManifest {
        command,
        scenario_name: scenario.name.clone(),
        scenario_hash: scenario.hash(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        seed: scenario.seed,
        presets: scenario.presets.clone(),
        resolved_parameters: serde_json::to_value(&scenario.params).expect("parameters serialize"),
        sweeps: serde_json::to_value(&scenario.sweeps).expect("sweeps serialize"),
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write(out_dir, MANIFEST_FILE, text.as_bytes())?;
    Ok(manifest)
}
