//! `phaselab`: reproducible phase-space and dispersive-estimate experiments.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 numerical-validity failure.

mod commands;
mod config;

use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{Overrides, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Invalid(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Invalid(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Invalid(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<phaselab::Error> for CliError {
    fn from(e: phaselab::Error) -> Self {
        use phaselab::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidGrid(_)
            | E::BandOutOfRange { .. }
            | E::InvalidParameter(_)
            | E::GridMismatch(_)
            | E::EmptySeries(_)
            | E::RescaleRegime { .. }
            | E::SizeBudget(_)
            | E::CellBudget { .. }
            | E::ConvexityViolated { .. }
            | E::UnderResolved { .. } => CliError::Config(msg),
            E::NormDrift { .. } | E::ShellExit { .. } | E::TooFewPoints { .. } => CliError::Invalid(msg),
            E::Io(_) | E::Csv(_) | E::Format(_) => CliError::Runtime(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "phaselab", version, about = "Phase-space and dispersive-estimate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// FBI isometry and inversion errors on random band-limited fields.
    FbiCheck,
    /// Hamilton flow and variational matrices of one trajectory.
    Flow,
    /// Evolve band-limited data under the Weyl quantization of a symbol.
    Evolve,
    /// Phase-space localization of an evolved coherent state.
    Coherent,
    /// Dispersive decay fits across frequencies.
    Dispersive,
    /// Strichartz norm scaling across frequencies.
    Strichartz,
    /// Greedy time partition under forcing and symbol budgets.
    Partition,
    /// Water-wave symbols, good unknown and band-norm scaling of a ripple.
    WwSymbols,
    /// Exact exponent table of the well-posedness threshold.
    Exponents,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::FbiCheck => "fbi-check",
            Command::Flow => "flow",
            Command::Evolve => "evolve",
            Command::Coherent => "coherent",
            Command::Dispersive => "dispersive",
            Command::Strichartz => "strichartz",
            Command::Partition => "partition",
            Command::WwSymbols => "ww-symbols",
            Command::Exponents => "exponents",
        }
    }
}

/// What a command hands back for the manifest.
pub struct Report {
    pub summary: serde_json::Value,
    pub outputs: Vec<String>,
    pub valid: bool,
}

fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Report, CliError> {
    match cmd {
        Command::FbiCheck => commands::fbi_check(cfg, out),
        Command::Flow => commands::flow(cfg, out),
        Command::Evolve => commands::evolve(cfg, out),
        Command::Coherent => commands::coherent(cfg, out),
        Command::Dispersive => commands::dispersive(cfg, out),
        Command::Strichartz => commands::strichartz(cfg, out),
        Command::Partition => commands::partition(cfg, out),
        Command::WwSymbols => commands::ww_symbols(cfg, out),
        Command::Exponents => commands::exponents(cfg, out),
    }
}

fn write_manifest(
    out: &Path,
    cmd: Command,
    cfg: &RunConfig,
    status: &str,
    report: Option<&Report>,
    error: Option<&str>,
) -> Result<(), CliError> {
    let manifest = json!({
        "command": cmd.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed(),
        "config": cfg,
        "status": status,
        "valid": report.map(|r| r.valid),
        "outputs": report.map(|r| r.outputs.clone()).unwrap_or_default(),
        "summary": report.map(|r| r.summary.clone()),
        "error": error,
    });
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match RunConfig::resolve(&cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("phaselab: configuration error: {}", e.message());
            return ExitCode::from(e.code());
        }
    };
    let out = cfg.out_dir();
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("phaselab: cannot create {}: {e}", out.display());
        return ExitCode::from(1);
    }
    let result = run(cli.command, &cfg, &out);
    let (code, status, report, error) = match result {
        Ok(r) if r.valid => (0, "ok", Some(r), None),
        Ok(r) => (3, "invalid", Some(r), None),
        Err(e) => (e.code(), "error", None, Some(e)),
    };
    if let Err(e) = write_manifest(
        &out,
        cli.command,
        &cfg,
        status,
        report.as_ref(),
        error.as_ref().map(|e| e.message()),
    ) {
        eprintln!("phaselab: cannot write manifest: {}", e.message());
        return ExitCode::from(1);
    }
    match (&report, &error) {
        (Some(r), _) => println!("{}", serde_json::to_string_pretty(&r.summary).unwrap_or_default()),
        (_, Some(e)) => eprintln!("phaselab: {}", e.message()),
        _ => {}
    }
    ExitCode::from(code)
}
