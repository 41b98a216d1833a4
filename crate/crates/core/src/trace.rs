//! Per-epoch run records and their CSV/JSON serialization.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "epoch,f,grad_norm,ifo,perturbed,lambda_min,tau";

/// State at the start of an epoch, after its gradient was formed and before
/// any perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub f: f64,
    pub grad_norm: f64,
    /// Cumulative IFO under the run's convention.
    pub ifo: u64,
    /// Whether a perturbation (or escape phase) fired during this epoch.
    pub perturbed: bool,
    pub lambda_min: Option<f64>,
    pub tau: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    Stalled,
    FThres,
    Diverged,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::Stalled => "stalled",
            StopReason::FThres => "f_thres",
            StopReason::Diverged => "diverged",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub method: String,
    pub seed: u64,
    pub reason: StopReason,
    pub epochs: usize,
    pub total_ifo: u64,
    pub second_order_calls: u64,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub final_lambda_min: Option<f64>,
    pub x0: Vec<f64>,
    pub x_final: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub summary: TraceSummary,
}

fn cell(v: Option<f64>) -> String {
    v.map(|t| t.to_string()).unwrap_or_default()
}

impl Trace {
    /// The CSV body, one line per row after the header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.epoch,
                r.f,
                r.grad_norm,
                r.ifo,
                u8::from(r.perturbed),
                cell(r.lambda_min),
                cell(r.tau)
            ));
        }
        out
    }

    /// Objective values by epoch.
    pub fn objective(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.f).collect()
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.grad_norm).collect()
    }
}

/// `trace.csv` gets the sidecar `trace.summary.json`.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary.json")
}

/// Writes the CSV and its JSON summary sidecar.
pub fn write_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let write = |p: &Path, body: &str| -> Result<()> {
        let file = File::create(p).map_err(|e| Error::io(p, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(body.as_bytes()).map_err(|e| Error::io(p, e))?;
        w.flush().map_err(|e| Error::io(p, e))
    };
    write(path, &trace.to_csv())?;
    let mut json = serde_json::to_string_pretty(&trace.summary).expect("summary serializes");
    json.push('\n');
    write(&summary_path(path), &json)
}
