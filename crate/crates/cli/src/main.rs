use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dpt::{config, parse_config_with, render, threads_from_env, Command, Format, RunError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    GroundState,
    SteadyStates,
    Excitations,
    Stability,
    Variance,
    Response,
    Sweep,
    Boundary,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::GroundState => Command::GroundState,
            Cmd::SteadyStates => Command::SteadyStates,
            Cmd::Excitations => Command::Excitations,
            Cmd::Stability => Command::Stability,
            Cmd::Variance => Command::Variance,
            Cmd::Response => Command::Response,
            Cmd::Sweep => Command::Sweep,
            Cmd::Boundary => Command::Boundary,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Fmt {
    Csv,
    Json,
}

/// Mean-field, stability and spectral analysis of the Kerr parametric
/// oscillator and the interpolating Dicke-Tavis-Cummings model.
#[derive(Debug, Parser)]
#[command(name = "dpt", version, after_help = config::keys_help() + "\nEnvironment:\n  DPT_THREADS      worker threads for sweeps [all cores]\n\nExit status: 0 success, 2 invalid input, 3 numerical failure.")]
struct Cli {
    /// Command to run; overrides `command` in the config file.
    #[arg(value_enum)]
    command: Cmd,
    /// Config file in `key = value` format.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; overrides `format` in the config.
    #[arg(long, value_enum)]
    format: Option<Fmt>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint!("{e}");
            if !e.to_string().ends_with('\n') {
                eprintln!();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<(), RunError> {
    let threads = threads_from_env(std::env::var("DPT_THREADS").ok().as_deref())?;
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| RunError::Io(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg = parse_config_with(&text, Some(cli.command.into()))?;
    if let Some(f) = cli.format {
        cfg.format = match f {
            Fmt::Csv => Format::Csv,
            Fmt::Json => Format::Json,
        };
    }
    let rendered = render(&cfg, dpt::run(&cfg, threads)?);
    match cli.out.as_ref().or(cfg.out.as_ref()) {
        Some(path) => std::fs::write(path, rendered).map_err(|e| RunError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(rendered.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(RunError::Io(format!("cannot write output: {e}"))),
                _ => {}
            }
        }
    }
    Ok(())
}
