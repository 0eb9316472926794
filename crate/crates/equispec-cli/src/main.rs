mod args;
mod commands;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use equispec::ErrorKind;

use crate::args::{ConfigFile, FitArgs, GenerateArgs, PerturbArgs, SolveArgs};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "EQUISPEC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "equispec", version, about = "Equidistant spectra: solve, generate, perturb and fit")]
struct Cli {
    /// TOML file with defaults for every command; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $EQUISPEC_OUT_DIR, then ./out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Also write SVG line charts.
    #[arg(long, global = true)]
    svg: bool,
    /// Increase log verbosity (-v, -vv).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the Schrödinger equation for a potential family or preset.
    Solve(SolveArgs),
    /// Generate a shift-operator potential by integrating its ODE.
    Generate(GenerateArgs),
    /// Exact perturbation corrections for a polynomial perturbation.
    Perturb(PerturbArgs),
    /// Fit the thickness dependence of measured level spacings.
    Fit(FitArgs),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Lib(#[from] equispec::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Lib(e) => match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Io => 4,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Settings shared by every command after merging flags, config and environment.
pub struct Context {
    pub out_dir: PathBuf,
    pub svg: bool,
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| file.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context { out_dir, svg: cli.svg || file.svg.unwrap_or(false) };
    match cli.command {
        Command::Solve(a) => commands::solve::run(a.overlay(file.solve.unwrap_or_default()), &ctx),
        Command::Generate(a) => commands::generate::run(a.overlay(file.generate.unwrap_or_default()), &ctx),
        Command::Perturb(a) => commands::perturb::run(a.overlay(file.perturb.unwrap_or_default()), &ctx),
        Command::Fit(a) => commands::fit::run(a.overlay(file.fit.unwrap_or_default()), &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
