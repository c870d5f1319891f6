//! `ionspin`: regenerate gate-time tables, level diagrams, fidelity curves,
//! chain spectra, magnet and trap figures as CSV or JSON.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod units;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "ionspin", version, about = "Spin-qubit gates of trapped ions in a magnetic field gradient")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format [default: csv].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file [default: standard output].
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium positions, spacings and axial normal modes.
    Crystal(commands::CrystalArgs),
    /// Spin-spin couplings and gate times beside the published table.
    Table1(commands::Table1Args),
    /// Single-ion hyperfine levels and transitions.
    Levels(commands::LevelsArgs),
    /// CNOT fidelity of the high-field model versus field.
    Fidelity(commands::FidelityArgs),
    /// Electron-flip line lists of an ion chain.
    Spectrum(commands::SpectrumArgs),
    /// Central field of a Halbach magnet.
    Halbach(commands::HalbachArgs),
    /// Radial secular frequencies of an RF trap in a magnetic field.
    Pseudo(commands::PseudoArgs),
    /// Refit of the effective gyromagnetic ratios.
    #[command(name = "ratios-refit")]
    RatiosRefit(commands::RefitArgs),
}

fn run(cli: Cli) -> Result<Option<CliError>, CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let species = config.species()?;
    let format = cli.format.or(config.output.format).unwrap_or_default();
    let path = cli.output.clone().or_else(|| config.output.path.clone());
    let ctx = Context { config, species };

    let outcome = match &cli.command {
        Command::Crystal(a) => commands::crystal(&ctx, a),
        Command::Table1(a) => commands::table1(&ctx, a),
        Command::Levels(a) => commands::levels(&ctx, a),
        Command::Fidelity(a) => commands::fidelity(&ctx, a),
        Command::Spectrum(a) => commands::spectrum(&ctx, a),
        Command::Halbach(a) => commands::halbach(&ctx, a),
        Command::Pseudo(a) => commands::pseudo(&ctx, a),
        Command::RatiosRefit(a) => commands::ratios_refit(&ctx, a),
    }?;

    let mut out: Box<dyn Write> = match &path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    outcome.report.write(format, &mut out)?;
    out.flush()?;
    Ok(outcome.failure)
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or_default().trim_start_matches("error: ");
            return fail(&CliError::Validation(first.to_string()));
        }
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => fail(&e),
    }
}
