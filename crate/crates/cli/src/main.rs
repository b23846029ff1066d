//! `grushin`: evaluate geodesics, conjugate and cut loci of generalized
//! Grushin spaces and check them against numerical oracles.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when `verify` finds a
//! failing suite.

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{Flags, RunConfig};
use output::{Table, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "grushin", version, about = "Geodesics and cut loci of generalized Grushin spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Sample sin_{a,b}, cos_{a,b} and eta over one period.
    Trig,
    /// Sample x(t), p(t), H and R_j along a geodesic, with a row at tau.
    Geodesic,
    /// Endpoints at time --t of geodesics over a grid of the unit fiber.
    Sphere,
    /// Cut-time candidates and the first conjugate time.
    Conjugate,
    /// Cut locus of a point of a 3D space: polylines and plane descriptors.
    CutLocus,
    /// Type of a point of a 3D space.
    Classify,
    /// Run the verification suites.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Trig => "trig",
            Command::Geodesic => "geodesic",
            Command::Sphere => "sphere",
            Command::Conjugate => "conjugate",
            Command::CutLocus => "cut-locus",
            Command::Classify => "classify",
            Command::Verify => "verify",
        }
    }
}

fn emit(table: &mut Table, command: Command, cfg: &RunConfig) -> Result<()> {
    table.meta("schema_version", SCHEMA_VERSION);
    table.meta("command", command.name());
    table.meta("config", cfg);
    match &cfg.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(f);
            table.write(cfg.format(), &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(cfg.format(), &mut w)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = cli.flags.resolve()?;
    let (mut table, ok) = match cli.command {
        Command::Trig => (commands::trig(&cfg)?, true),
        Command::Geodesic => (commands::geodesic(&cfg)?, true),
        Command::Sphere => (commands::sphere(&cfg)?, true),
        Command::Conjugate => (commands::conjugate(&cfg)?, true),
        Command::CutLocus => (commands::cut_locus(&cfg)?, true),
        Command::Classify => (commands::classify(&cfg)?, true),
        Command::Verify => commands::verify(&cfg)?,
    };
    emit(&mut table, cli.command, &cfg)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
