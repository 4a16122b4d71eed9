//! Front end for `dpt`: config parsing, command dispatch and CSV/JSON output.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;

pub use commands::{run, Output};
pub use config::{parse_config, parse_config_with, Command, ConfigError, Format, Model, RunConfig};
pub use output::{Cell, Report, Table};

/// Process exit status for each failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(dpt_core::Error),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => exit::VALIDATION,
            RunError::Core(dpt_core::Error::Validation(_) | dpt_core::Error::Bracketing(_)) => exit::VALIDATION,
            RunError::Core(_) => exit::NUMERICAL,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Core(e) => write!(f, "error: {e}"),
            RunError::Io(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<dpt_core::Error> for RunError {
    fn from(e: dpt_core::Error) -> Self {
        RunError::Core(e)
    }
}

/// Reads `DPT_THREADS`; `None` means all available cores.
pub fn threads_from_env(value: Option<&str>) -> Result<Option<usize>, ConfigError> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError { problems: vec![format!("DPT_THREADS must be a positive integer, got `{v}`")] }),
        },
    }
}

/// Renders the result of `cfg` in its configured format.
pub fn render(cfg: &RunConfig, out: Output) -> String {
    match cfg.format {
        Format::Csv => out.table.to_csv(),
        Format::Json => out.report(cfg).to_json(),
    }
}

/// Parses, runs and renders in one step.
pub fn execute(text: &str, command: Option<Command>, threads: Option<usize>) -> Result<(RunConfig, String), RunError> {
    let cfg = parse_config_with(text, command)?;
    let out = run(&cfg, threads)?;
    let s = render(&cfg, out);
    Ok((cfg, s))
}
