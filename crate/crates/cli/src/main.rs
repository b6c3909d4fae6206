//! `urnlab`: exact laws, limit-variable sampling, fixed points and moments
//! for large two-color Pólya urns.
//!
//! Exit status: 0 on success, 1 on a configuration error, 2 when a
//! numerical invariant check fails.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};

use crate::commands::{companion, Report};
use crate::config::Settings;

#[derive(Debug, Parser)]
#[command(name = "urnlab", version, about = "Numerical laboratory for large two-color Pólya urns")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file with settings keyed by long flag name
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    settings: Settings,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Exact law of the red count after --steps draws
    ExactDist,
    /// Sample W^DT or W^CT (--system)
    McW,
    /// Compare W^CT with xi^sigma W^DT
    ConnexionCheck,
    /// Iterate the smoothing fixed-point map on particle pools
    Fixpoint,
    /// Exact moments of the elementary limits, and of W for --init
    Moments,
    /// Check Phi(p) against its bound for p up to --pmax
    PhiCheck,
    /// Diagonal urn against its Dirichlet limit
    DirichletCheck,
    /// Exact E Gamma_p(P_n) for a diagonal urn
    GammaP,
    /// Kernel density estimate of W
    Density,
    /// Empirical characteristic-function modulus of W
    CfDecay,
}

fn run(command: Command, settings: Settings) -> anyhow::Result<Report> {
    match command {
        Command::ExactDist => commands::exact_dist(settings),
        Command::McW => commands::mc_w(settings),
        Command::ConnexionCheck => commands::connexion_check(settings),
        Command::Fixpoint => commands::fixpoint(settings),
        Command::Moments => commands::moments(settings),
        Command::PhiCheck => commands::phi_check(settings),
        Command::DirichletCheck => commands::dirichlet_check(settings),
        Command::GammaP => commands::gamma_p(settings),
        Command::Density => commands::density(settings),
        Command::CfDecay => commands::cf_decay(settings),
    }
}

fn resolve(cli: Cli) -> anyhow::Result<(Command, Settings)> {
    let base = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    Ok((cli.command, base.overlay(cli.settings)))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let report = resolve(cli).and_then(|(command, settings)| {
        if let Some(t) = settings.threads {
            config::positive("threads", t)?;
            urnlab::exec::set_threads(t);
        }
        run(command, settings)
    });
    let mut report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Some(out) = report.config.out.clone() {
        let path = companion(&out, "summary", "json");
        report.artifacts.push(path.clone());
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        if let Err(e) = std::fs::write(&path, text) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    // a closed pipe on stdout is not an error of the run
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    let mut failed = false;
    for c in report.failures() {
        eprintln!("invariant violated: {}: {}", c.name, c.detail);
        failed = true;
    }
    if failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
