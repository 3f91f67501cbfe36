//! Command-line driver for the electrohydrodynamics experiments.
//!
//! Exit codes: 0 on success, 1 for bad arguments or configuration, 2 when a
//! solve fails or a run violates one of its checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ehd_core::experiments::{run_experiment, Experiment, RunConfig};
use ehd_core::Error;
use log::{error, info};

#[derive(Debug, Parser)]
#[command(name = "ehd", version, about = "Finite element experiments for a coupled charge transport and Navier-Stokes model")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Only log errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Time-step sweep against the manufactured solution.
    ConvergeTime,
    /// Mesh sweep against the manufactured solution.
    ConvergeSpace,
    /// Unforced run logging energy and total charge.
    Stability,
    /// Free run with optional field dumps.
    Run,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::ConvergeTime => Experiment::ConvergeTime,
            Command::ConvergeSpace => Experiment::ConvergeSpace,
            Command::Stability => Experiment::Stability,
            Command::Run => Experiment::Run,
        }
    }
}

const EXIT_INVALID: u8 = 1;
const EXIT_FAILED: u8 = 2;

fn is_validation(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::InvalidMesh(_)
            | Error::UnsupportedQuadrature(_)
            | Error::NonFinite { .. }
            | Error::IncompatibleCharge { .. }
    )
}

fn exit_code(e: &Error) -> u8 {
    if is_validation(e) {
        EXIT_INVALID
    } else {
        EXIT_FAILED
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let experiment = cli.command.experiment();
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path, experiment)?,
        None => RunConfig::defaults(experiment),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Vec<String>, Error> {
    let cfg = load_config(cli)?;
    info!("{}: n = {:?}, tau = {:?}, t_end = {}", cfg.experiment.name(), cfg.n, cfg.tau, cfg.t_end);
    let report = run_experiment(&cfg)?;
    report.write()?;
    for (path, _) in &report.files {
        info!("wrote {}", path.display());
    }
    Ok(report.failures)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Info };
    env_logger::Builder::new().filter_level(level).parse_env("EHD_LOG").format_timestamp(None).init();

    match run(&cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                error!("check failed: {f}");
            }
            ExitCode::from(EXIT_FAILED)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
