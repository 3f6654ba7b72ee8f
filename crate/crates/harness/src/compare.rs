//! Side-by-side runs of several controllers on one scenario.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::output::{emit_csv, write_json};
use crate::runner::{run_config, RunOutput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub algorithm: String,
    pub nr_db: Option<f64>,
    pub steady_state_output_power: f64,
    pub steady_state_residual_power: f64,
    pub violation_ratio: f64,
    pub convergence_index: Option<usize>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

/// Runs must share the excitation (including seeds), both paths and the run length.
fn check_comparable(configs: &[(String, ScenarioConfig)]) -> Result<()> {
    if configs.len() < 2 {
        return Err(HarnessError::Comparability(format!(
            "need at least two runs, got {}",
            configs.len()
        )));
    }
    let (first_label, first) = &configs[0];
    for (label, c) in &configs[1..] {
        let differs = [
            ("noise (source or seed)", c.noise_source() != first.noise_source()),
            ("paths.primary", c.paths.primary != first.paths.primary),
            ("paths.secondary", c.paths.secondary != first.paths.secondary),
            ("sample_rate", c.sample_rate != first.sample_rate),
            ("num_samples", c.num_samples != first.num_samples),
        ];
        if let Some((what, _)) = differs.iter().find(|(_, d)| *d) {
            return Err(HarnessError::Comparability(format!(
                "{label} and {first_label} differ in {what}"
            )));
        }
    }
    Ok(())
}

/// Run every labelled configuration in parallel and tabulate the summaries.
/// A divergent member is reported in its row rather than failing the comparison.
pub fn compare_runs(
    configs: &[(String, ScenarioConfig)],
    base_dir: Option<&Path>,
) -> Result<(Comparison, Vec<RunOutput>)> {
    check_comparable(configs)?;
    let results: Vec<Result<RunOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|(_, cfg)| s.spawn(move || run_config(cfg, base_dir)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = configs
        .iter()
        .zip(&runs)
        .map(|((label, cfg), run)| ComparisonRow {
            label: label.clone(),
            algorithm: cfg.controller.algorithm.name().to_string(),
            nr_db: run.summary.nr_db,
            steady_state_output_power: run.summary.steady_state_output_power,
            steady_state_residual_power: run.summary.steady_state_residual_power,
            violation_ratio: run.summary.violation_ratio,
            convergence_index: run.summary.convergence_index,
            diverged: run.summary.diverged,
        })
        .collect();
    Ok((Comparison { rows }, runs))
}

impl Comparison {
    /// Fixed-width text table.
    pub fn render_text(&self) -> String {
        let header = [
            "run",
            "algorithm",
            "nr_db",
            "output_power",
            "violation_ratio",
            "convergence",
            "diverged",
        ];
        let cells: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.label.clone(),
                    r.algorithm.clone(),
                    r.nr_db.map_or("-".into(), |v| format!("{v:.3}")),
                    format!("{:.6e}", r.steady_state_output_power),
                    format!("{:.6}", r.violation_ratio),
                    r.convergence_index.map_or("-".into(), |v| v.to_string()),
                    if r.diverged { "yes" } else { "no" }.to_string(),
                ]
            })
            .collect();
        let mut width = header.map(str::len);
        for row in &cells {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let mut line = |fields: &[String]| {
            let parts: Vec<String> = fields
                .iter()
                .zip(&width)
                .enumerate()
                .map(|(i, (f, w))| if i < 2 { format!("{f:<w$}") } else { format!("{f:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&header.map(String::from));
        for row in &cells {
            line(row);
        }
        out
    }
}

/// Write each member log, `compare.json` and `compare.txt` into `dir`.
pub fn write_comparison(dir: &Path, comparison: &Comparison, runs: &[RunOutput]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();
    for (i, (row, run)) in comparison.rows.iter().zip(runs).enumerate() {
        let path = dir.join(format!("{i:02}-{}.csv", row.algorithm));
        emit_csv(&run.outcome.log, &path)?;
        written.push(path);
    }
    let json = dir.join("compare.json");
    write_json(comparison, &json)?;
    let txt = dir.join("compare.txt");
    std::fs::write(&txt, comparison.render_text()).map_err(|e| HarnessError::io(&txt, e))?;
    written.extend([json, txt]);
    Ok(written)
}
