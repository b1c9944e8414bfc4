use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use lrtd::multislice::SegmentSummary;
use serde::Serialize;
use serde_json::Value;

pub const REPORT_VERSION: u32 = 1;

/// Machine-readable record of one invocation. Every key is always present;
/// commands that have nothing to say leave `segments` empty and
/// `metrics` as `{}`.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub report_version: u32,
    pub command: String,
    pub argv: Vec<String>,
    pub config: Value,
    pub segments: Vec<SegmentSummary>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub metrics: Value,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            report_version: REPORT_VERSION,
            command: command.to_string(),
            argv: std::env::args().collect(),
            config: Value::Object(Default::default()),
            segments: Vec::new(),
            timings: BTreeMap::new(),
            outputs: Vec::new(),
            metrics: Value::Object(Default::default()),
        }
    }

    pub fn time(&mut self, phase: &str, seconds: f64) {
        *self.timings.entry(phase.to_string()).or_insert(0.0) += seconds;
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn to_json(&self) -> anyhow::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes the report to `path`, or prints it when no path is given.
    pub fn emit(&self, path: Option<&Path>) -> anyhow::Result<()> {
        let text = self.to_json()?;
        match path {
            Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing report {}", p.display())),
            None => {
                println!("{text}");
                Ok(())
            }
        }
    }
}
