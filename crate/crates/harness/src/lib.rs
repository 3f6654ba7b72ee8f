//! Scenario configuration, reproducible runs, leak tuning and result files for
//! the `anc-core` controllers.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;

pub use compare::{compare_runs, Comparison, ComparisonRow};
pub use config::{parse_scenario, Format, ScenarioConfig, TuneMethod};
pub use error::{ConfigError, HarnessError, Result, Violation};
pub use output::{emit_csv, read_csv, write_csv, LogFormat, RunReport};
pub use runner::{identify, prepare, run_config, tune_leak, Prepared, RunOutput};

use std::path::{Path, PathBuf};

/// Read and parse a configuration file; the format follows the extension,
/// falling back to the content for unknown extensions.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        Some("toml") => Format::Toml,
        _ => Format::sniff(&text),
    };
    parse_scenario(&text, format).map_err(|e| {
        match e {
            ConfigError::Syntax(msg) => ConfigError::Syntax(format!("{}: {msg}", path.display())),
            other => other,
        }
        .into()
    })
}

/// Directory that relative paths inside a configuration file refer to.
pub fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}
