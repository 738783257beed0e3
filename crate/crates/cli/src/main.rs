//! `mtrd`: rate-distortion computations for Gaussian multiterminal source
//! coding systems described by a JSON model file.

mod commands;
mod model_file;
mod render;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{debug, error};
use mtrd_core::opt::SolverConfig;
use mtrd_core::{Error, Topology};

use render::{emit, Format, Render};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RANGE: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;
const EXIT_STRUCTURE: u8 = 5;

#[derive(Parser)]
#[command(name = "mtrd", version, about = "Rate-distortion functions of Gaussian multiterminal source coding systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Newton tolerance of the log-det solver.
    #[arg(long, global = true)]
    newton_tol: Option<f64>,

    /// Maximum number of barrier rounds of the log-det solver.
    #[arg(long, global = true)]
    max_outer: Option<usize>,

    /// Seed for randomized procedures. Every current subcommand is
    /// deterministic, so the value only appears in the log.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model and describe its covers.
    Validate { model: PathBuf },
    /// Rates of one cover and of centralized coding at a distortion.
    Rate {
        model: PathBuf,
        #[arg(long)]
        cover: String,
        #[arg(long)]
        d: f64,
    },
    /// Estimate the small-distortion gap coefficient and compare it with the prediction.
    Verify {
        model: PathBuf,
        #[arg(long)]
        cover: String,
        #[arg(long, default_value_t = 2.5e-3)]
        d_min: f64,
    },
    /// Rates on a geometric distortion grid, as plot-ready rows.
    Sweep {
        model: PathBuf,
        #[arg(long)]
        cover: String,
        #[arg(long)]
        d_max: f64,
        #[arg(long)]
        d_min: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Tune and check the explicit test-channel construction of a three-source topology.
    BtCheck {
        model: PathBuf,
        #[arg(long)]
        topology: Topology,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        #[arg(long)]
        d: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::OutOfTrustedRange { .. } => EXIT_RANGE,
        Error::DidNotConverge { .. } | Error::SeriesDiverges(_) | Error::TargetUnreachable { .. } => {
            EXIT_CONVERGENCE
        }
        Error::StructureViolation(_) | Error::SpecMismatch { .. } => EXIT_STRUCTURE,
        _ => EXIT_INPUT,
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<model_file::LoadError> for Failure {
    fn from(e: model_file::LoadError) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: format!("writing output: {e}"),
        }
    }
}

fn solver_config(cli: &Cli) -> Result<SolverConfig, Error> {
    let mut cfg = SolverConfig::default();
    if let Some(t) = cli.newton_tol {
        cfg.newton_tol = t;
    }
    if let Some(m) = cli.max_outer {
        cfg.max_outer = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write<R: Render>(report: &R, format: Format) -> Result<(), Failure> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let written = emit(&mut out, report, format).and_then(|_| out.flush());
    match written {
        // a closed reader (`| head`) is not an error
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    debug!("seed {}", cli.seed);
    let cfg = solver_config(cli)?;
    match &cli.command {
        Command::Validate { model } => {
            let m = model_file::load(model)?;
            write(&commands::validate(&m)?, cli.format)?;
            Ok(0)
        }
        Command::Rate { model, cover, d } => {
            let m = model_file::load(model)?;
            let c = m.cover(cover)?;
            write(&commands::rate(&m, cover, c, *d, &cfg)?, cli.format)?;
            Ok(0)
        }
        Command::Verify { model, cover, d_min } => {
            let m = model_file::load(model)?;
            let c = m.cover(cover)?;
            let record = commands::verify(&m, cover, c, *d_min, &cfg)?;
            write(&record, cli.format)?;
            Ok(match record.verdict {
                commands::Verdict::Pass => 0,
                commands::Verdict::Fail => EXIT_CHECK_FAILED,
                commands::Verdict::Unverifiable => EXIT_RANGE,
            })
        }
        Command::Sweep { model, cover, d_max, d_min, points } => {
            let m = model_file::load(model)?;
            let c = m.cover(cover)?;
            let grid = commands::geometric_grid(*d_max, *d_min, *points)?;
            let report = commands::sweep(&m, cover, c, &grid, &cfg);
            write(&report, cli.format)?;
            if report.acceptable() {
                Ok(0)
            } else {
                Ok(report.first_error.as_ref().map_or(EXIT_CONVERGENCE, exit_code))
            }
        }
        Command::BtCheck { model, topology, lambda, d } => {
            let m = model_file::load(model)?;
            write(&commands::bt_check(&m, *topology, *lambda, *d)?, cli.format)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MTRD_LOG", "off")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            error!("exit {}", f.code);
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
