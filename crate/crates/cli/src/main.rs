//! `qrt`: command-line front end for the Rabi triangle library.

mod commands;
mod config;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{Command, Flags, RunConfig, UsageError};

#[derive(Debug, Parser)]
#[command(
    name = "qrt",
    version,
    about = "Three coupled Rabi cavities with a hopping phase"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Photon transfer from cavity 1 in the truncated Fock space.
    Dynamics,
    /// Critical coupling and softest momentum across the flux range.
    PhaseBoundary,
    /// Per-site photon number, quadrature variances and lowest excitations versus g1.
    Fluctuations,
    /// Critical exponents from log-log fits near each transition.
    Exponents,
    /// Mean-field displacements versus g1.
    Meanfield,
    /// Excitation energies versus g1.
    Spectrum,
}

impl Sub {
    fn command(&self) -> Command {
        match self {
            Sub::Dynamics => Command::Dynamics,
            Sub::PhaseBoundary => Command::PhaseBoundary,
            Sub::Fluctuations => Command::Fluctuations,
            Sub::Exponents => Command::Exponents,
            Sub::Meanfield => Command::Meanfield,
            Sub::Spectrum => Command::Spectrum,
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = RunConfig::resolve(cli.command.command(), &cli.flags)?;
    let out = match cfg.command {
        Command::Dynamics => commands::dynamics(&cfg),
        Command::PhaseBoundary => commands::phase_boundary(&cfg),
        Command::Fluctuations => commands::fluctuations_scan(&cfg),
        Command::Exponents => commands::exponents(&cfg),
        Command::Meanfield => commands::meanfield(&cfg),
        Command::Spectrum => commands::spectrum(&cfg),
    }?;
    match &cfg.out {
        Some(path) => {
            write_file(path, &out.csv)?;
            if let Some(table) = &out.table {
                let mut name = path.as_os_str().to_owned();
                name.push(".table.txt");
                write_file(Path::new(&name), table)?;
            }
        }
        None => {
            std::io::stdout()
                .lock()
                .write_all(out.csv.as_bytes())
                .context("writing stdout")?;
            if let Some(table) = &out.table {
                eprint!("{table}");
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<rabi_triangle::Error>() {
        Some(rabi_triangle::Error::InvalidParams(_)) => 2,
        Some(_) => 3,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qrt: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
