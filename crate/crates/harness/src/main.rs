use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anc_sim::compare::write_comparison;
use anc_sim::output::write_run;
use anc_sim::{
    compare_runs, config_dir, identify, load_config, run_config, tune_leak, HarnessError, LogFormat, TuneMethod,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "anc-sim",
    version,
    about = "Output-constrained active noise control simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its log and report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = LogFormat::Csv)]
        format: LogFormat,
    },
    /// Measure the uncontrolled scenario and print the optimal-leak snapshot as JSON.
    TuneLeak {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Also write the snapshot to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Identify the secondary path and print the estimate as JSON.
    Identify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run several configurations on the same scenario and tabulate them.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Band,
    Frame,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Print to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<(), HarnessError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(HarnessError::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes to JSON")
}

fn execute(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Run { config, out, format } => {
            let cfg = load_config(&config)?;
            let run = run_config(&cfg, Some(&config_dir(&config)))?;
            for w in &run.outcome.warnings {
                eprintln!("warning: {w}");
            }
            let report = write_run(&out, &cfg, &run, format)?;
            emit(&format!("{}\n", to_json(&report.summary)))?;
            if let Some(anc_core::Error::Divergence { step, reason, .. }) = run.outcome.divergence {
                return Err(HarnessError::Divergence { step, reason });
            }
            Ok(())
        }
        Command::TuneLeak { config, method, out } => {
            let cfg = load_config(&config)?;
            let method = match method {
                Method::Band => TuneMethod::Band,
                Method::Frame => TuneMethod::Frame,
            };
            let snapshot = to_json(&tune_leak(&cfg, method)?);
            if let Some(path) = out {
                write_text(&path, &snapshot)?;
            }
            emit(&format!("{snapshot}\n"))?;
            Ok(())
        }
        Command::Identify { config } => {
            let cfg = load_config(&config)?;
            emit(&format!("{}\n", to_json(&identify(&cfg)?)))?;
            Ok(())
        }
        Command::Compare { configs, out } => {
            let mut labelled = Vec::with_capacity(configs.len());
            for path in &configs {
                let label = path
                    .file_stem()
                    .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
                labelled.push((label, load_config(path)?));
            }
            let base = configs.first().map(|p| config_dir(p));
            let (comparison, runs) = compare_runs(&labelled, base.as_deref())?;
            write_comparison(&out, &comparison, &runs)?;
            emit(&comparison.render_text())?;
            Ok(())
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, format!("{text}\n")).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
