//! Run artifacts: the JSON summary, JSON-lines diagnostics and helpers for
//! writing measure files into the output directory.

use crate::CliResult;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use umot::solver::Diagnostics;

/// Summary written once per run as `summary.json`.  Maps are sorted so
/// reruns produce identical bytes.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub seed: Option<u64>,
    pub epsilon: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub final_dual: f64,
    pub dual_monotone: bool,
    pub masses: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl RunSummary {
    pub fn new(command: &str, epsilon: f64) -> Self {
        Self {
            command: command.into(),
            seed: None,
            epsilon,
            sweeps: 0,
            converged: false,
            final_dual: f64::NAN,
            dual_monotone: true,
            masses: BTreeMap::new(),
            metrics: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn absorb_diagnostics(&mut self, diag: &Diagnostics) {
        self.sweeps = diag.sweeps;
        self.converged = diag.converged;
        self.final_dual = diag.final_dual;
        self.dual_monotone = diag.dual_monotone;
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, out_dir: &Path) -> CliResult<PathBuf> {
        let path = out_dir.join("summary.json");
        let json = serde_json::to_string_pretty(self)
            .expect("summary serialization cannot fail");
        std::fs::write(&path, json + "\n")?;
        Ok(path)
    }
}

/// One JSON line per diagnostics record (`diagnostics.jsonl`).
#[derive(Debug, Serialize)]
struct DiagnosticsLine {
    sweep: usize,
    dual_value: f64,
    max_u_change: f64,
    kernel_applications: u64,
}

pub fn write_diagnostics(out_dir: &Path, name: &str, diag: &Diagnostics) -> CliResult<PathBuf> {
    let path = out_dir.join(name);
    let mut f = std::fs::File::create(&path)?;
    for r in &diag.records {
        let line = DiagnosticsLine {
            sweep: r.sweep,
            dual_value: r.dual_value,
            max_u_change: r.max_u_change,
            kernel_applications: r.kernel_applications,
        };
        writeln!(f, "{}", serde_json::to_string(&line).expect("record serializes"))?;
    }
    Ok(path)
}

pub fn ensure_out_dir(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}
