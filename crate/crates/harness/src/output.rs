//! Log files and run reports.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anc_core::controller::ALGORITHM_ID;
use anc_core::metrics::{LogRow, MetricsLog, ModeFlag, RunSummary};
use anc_core::signal::GENERATOR_ID;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::runner::{ResolvedParameters, RunOutput};

pub const CSV_HEADER: [&str; 9] = ["n", "x", "d", "y", "y_out", "e", "mode", "gamma", "y_power"];

/// Scientific notation with 17 significant digits: every `f64` survives a
/// text round trip exactly.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write the log as CSV with LF line endings.
pub fn write_csv<W: Write>(log: &MetricsLog, out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for n in 0..log.len() {
        let r = log.row(n);
        w.write_record([
            n.to_string(),
            num(r.x),
            num(r.d),
            num(r.y),
            num(r.y_out),
            num(r.e),
            r.mode.code().to_string(),
            num(r.gamma),
            num(r.y_power),
        ])?;
    }
    w.flush()
}

pub fn emit_csv(log: &MetricsLog, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv(log, BufWriter::new(file)).map_err(|e| HarnessError::io(path, e))
}

/// Read a log written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<MetricsLog> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header = r.headers().map_err(|e| HarnessError::Log(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(HarnessError::Log(format!("unexpected header {header:?}")));
    }
    let mut log = MetricsLog::default();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| HarnessError::Log(e.to_string()))?;
        let field = |k: usize| -> Result<f64> {
            rec[k]
                .parse()
                .map_err(|_| HarnessError::Log(format!("row {i}, column {}: bad number {:?}", CSV_HEADER[k], &rec[k])))
        };
        let mode = rec[6]
            .parse()
            .ok()
            .and_then(ModeFlag::from_code)
            .ok_or_else(|| HarnessError::Log(format!("row {i}: bad mode {:?}", &rec[6])))?;
        log.push(LogRow {
            x: field(1)?,
            d: field(2)?,
            y: field(3)?,
            y_out: field(4)?,
            e: field(5)?,
            mode,
            gamma: field(7)?,
            y_power: field(8)?,
        });
    }
    Ok(log)
}

/// Column-oriented JSON form of a log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonLog {
    pub x: Vec<f64>,
    pub d: Vec<f64>,
    pub y: Vec<f64>,
    pub y_out: Vec<f64>,
    pub e: Vec<f64>,
    pub mode: Vec<u8>,
    pub gamma: Vec<f64>,
    pub y_power: Vec<f64>,
    pub diverged: bool,
}

impl From<&MetricsLog> for JsonLog {
    fn from(l: &MetricsLog) -> Self {
        Self {
            x: l.x.clone(),
            d: l.d.clone(),
            y: l.y.clone(),
            y_out: l.y_out.clone(),
            e: l.e.clone(),
            mode: l.mode.iter().map(|m| m.code()).collect(),
            gamma: l.gamma.clone(),
            y_power: l.y_power.clone(),
            diverged: l.diverged,
        }
    }
}

pub fn emit_json_log(log: &MetricsLog, path: &Path) -> Result<()> {
    write_json(&JsonLog::from(log), path)
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(std::io::Error::from)
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| HarnessError::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum LogFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub generator_id: String,
    pub algorithm_id: String,
    pub harness_version: String,
    /// The configuration as parsed, defaults applied; feeding it back reproduces the run.
    pub config: ScenarioConfig,
    pub resolved: ResolvedParameters,
    pub summary: RunSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<String>,
    pub warnings: Vec<String>,
    pub final_weights: Vec<f64>,
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    pub fn new(config: &ScenarioConfig, run: &RunOutput, artifacts: Vec<PathBuf>) -> Self {
        Self {
            generator_id: GENERATOR_ID.to_string(),
            algorithm_id: ALGORITHM_ID.to_string(),
            harness_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            resolved: run.prepared.resolved(),
            summary: run.summary.clone(),
            divergence: run.outcome.divergence.as_ref().map(|e| e.to_string()),
            warnings: run.outcome.warnings.clone(),
            final_weights: run.outcome.final_weights.clone(),
            artifacts,
        }
    }
}

/// Write the log and `report.json` into `dir`, creating it if needed.
pub fn write_run(dir: &Path, config: &ScenarioConfig, run: &RunOutput, format: LogFormat) -> Result<RunReport> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let log_path = match format {
        LogFormat::Csv => dir.join("log.csv"),
        LogFormat::Json => dir.join("log.json"),
    };
    match format {
        LogFormat::Csv => emit_csv(&run.outcome.log, &log_path)?,
        LogFormat::Json => emit_json_log(&run.outcome.log, &log_path)?,
    }
    let report = RunReport::new(config, run, vec![log_path]);
    write_json(&report, &dir.join("report.json"))?;
    Ok(report)
}
