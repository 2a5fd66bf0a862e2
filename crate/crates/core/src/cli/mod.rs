//! Command-line experiment runner.
//!
//! `dichobell <experiment> [--config PATH] [--seed N] [--samples N] [--out DIR]`
//! where `<experiment>` is `correlate`, `chsh`, `ghz` or `optical`, or
//! `dichobell run --config PATH` to take the experiment from the file.
//! Flags override the corresponding config fields.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

pub use config::{validate_config, validate_value, ConfigError, ExperimentConfig, ExperimentKind};
pub use run::{run_experiment, RunError, RunSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "dichobell",
    version,
    about = "Deterministic dichotomic-correlation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact correlation of two dichotomic functions against -cos
    Correlate(Overrides),
    /// CHSH values for the quantum and a hidden-variable correlation
    Chsh(Overrides),
    /// Parity verdict and value lattice for product correlations
    Ghz(Overrides),
    /// Coincidence probabilities and classical click simulation
    Optical(Overrides),
    /// Run the experiment named in the config file
    Run(Overrides),
}

#[derive(Debug, Args)]
struct Overrides {
    /// JSON config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn assemble(kind: Option<ExperimentKind>, o: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut doc = match &o.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                ConfigError::new("", format!("cannot read {}: {e}", path.display()))
            })?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| ConfigError::new("", format!("malformed JSON: {e}")))?
        }
        None if kind.is_none() => {
            return Err(ConfigError::new("", "run requires --config"));
        }
        None => Value::Object(Default::default()),
    };
    let obj = doc
        .as_object_mut()
        .ok_or_else(|| ConfigError::new("", "expected a JSON object"))?;
    if let Some(kind) = kind {
        match obj.get("experiment") {
            None => {
                obj.insert("experiment".into(), kind.tag().into());
            }
            Some(Value::String(tag)) if tag == kind.tag() => {}
            Some(other) => {
                return Err(ConfigError::new(
                    "experiment",
                    format!("config names {other} but the subcommand is {}", kind.tag()),
                ));
            }
        }
    }
    if let Some(seed) = o.seed {
        obj.insert("seed".into(), seed.into());
    }
    if let Some(samples) = o.samples {
        obj.insert("samples".into(), samples.into());
    }
    if let Some(out) = &o.out {
        obj.insert("out_dir".into(), out.to_string_lossy().into_owned().into());
    }
    validate_value(doc)
}

/// Parses `args` (including the program name), runs the experiment and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (kind, overrides) = match &cli.command {
        Command::Correlate(o) => (Some(ExperimentKind::Correlate), o),
        Command::Chsh(o) => (Some(ExperimentKind::Chsh), o),
        Command::Ghz(o) => (Some(ExperimentKind::Ghz), o),
        Command::Optical(o) => (Some(ExperimentKind::Optical), o),
        Command::Run(o) => (None, o),
    };
    let config = match assemble(kind, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run_experiment(&config) {
        Ok(_) => {
            println!("{}", config.out_dir.join(run::SUMMARY_FILE).display());
            EXIT_OK
        }
        Err(e @ RunError::Io { .. }) => {
            eprintln!("error: {e}");
            EXIT_IO
        }
        Err(e @ RunError::Invalid(_)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
