//! `xkerr`: cavity cross-phase scenarios and the two-mode tomography pipeline.
//!
//! Exit status: 0 success, 1 runtime or I/O failure, 2 usage, 3 config,
//! 4 input data, 5 maximum-likelihood fit did not converge (the report is
//! still written).

mod commands;
mod config;
mod input;
mod table;
mod tomography;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::CommandError;
use crate::config::{ConfigError, Format, RunConfig};
use crate::tomography::TomographyRunError;

#[derive(Parser, Debug)]
#[command(name = "xkerr", version, about = "Single-photon cross-phase modulation in cavity QED: scenarios and tomography")]
struct Cli {
    /// JSON run configuration; built-in experiment defaults when absent.
    #[arg(long, global = true, env = "XKERR_DEFAULT_CONFIG")]
    config: Option<PathBuf>,
    /// Output file (default: config `output.path`, else stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo and bootstrap; results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    /// Table format (tomography reports are always JSON).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Phase, linewidth, transmission and blocking factor against detuning.
    SweepDetuning,
    /// Mean and click-conditioned phase against mean control photon number.
    ConditionalPhase,
    /// Monte Carlo conditioned phase against conditioning time.
    Dwell {
        /// Also write the simulated detection records as CSV.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Density-matrix reconstruction.
    Tomography {
        #[command(subcommand)]
        mode: TomographyMode,
    },
}

#[derive(Subcommand, Debug)]
enum TomographyMode {
    /// Reconstruct from a coincidence file (CSV fringes or JSON set).
    Reconstruct { input: PathBuf },
    /// Generate synthetic data from the configured state and reconstruct it.
    Simulate {
        /// Also write the generated coincidence CSV.
        #[arg(long)]
        emit_input: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Command(#[from] CommandError),
    #[error(transparent)]
    Tomography(#[from] TomographyRunError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Runtime(String),
    #[error("maximum-likelihood fit did not converge after {0} evaluations; report written")]
    NotConverged(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) | CliError::Command(CommandError::Config(_)) => 3,
            CliError::Tomography(TomographyRunError::Config(_)) => 3,
            CliError::Tomography(TomographyRunError::Input(_)) => 4,
            CliError::NotConverged(_) => 5,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

/// Runs `write` against the output file, or stdout when there is none.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(io_err(p))?);
            write(&mut w).and_then(|_| w.flush()).map_err(io_err(p))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).and_then(|_| lock.flush()).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    let out = cli.out.clone().or_else(|| cfg.output.path.clone());
    let format = cli.format.unwrap_or(cfg.output.format);

    match cli.command {
        Command::SweepDetuning => {
            let t = commands::sweep_detuning(&cfg)?;
            emit(out.as_deref(), |w| t.write(format, w))
        }
        Command::ConditionalPhase => {
            let t = commands::conditional_phase(&cfg)?;
            emit(out.as_deref(), |w| t.write(format, w))
        }
        Command::Dwell { records } => {
            let (t, recs) = commands::dwell(&cfg)?;
            if let Some(path) = &records {
                emit(Some(path), |w| commands::write_records(&recs, w).map_err(std::io::Error::other))?;
            }
            emit(out.as_deref(), |w| t.write(format, w))
        }
        Command::Tomography { mode } => {
            if format == Format::Csv && cli.format.is_some() {
                return Err(CliError::Usage("tomography reports are JSON; drop --format csv".into()));
            }
            let report = match mode {
                TomographyMode::Reconstruct { input } => {
                    let data = tomography::load_input(&input, &cfg)?;
                    tomography::reconstruct(&data, &cfg, "reconstruct")?
                }
                TomographyMode::Simulate { emit_input } => {
                    let (report, text) = tomography::simulate(&cfg)?;
                    if let Some(path) = &emit_input {
                        emit(Some(path), |w| w.write_all(text.as_bytes()))?;
                    }
                    report
                }
            };
            emit(out.as_deref(), |w| {
                serde_json::to_writer_pretty(&mut *w, &report)?;
                writeln!(w)
            })?;
            if !report.maxlik.converged {
                return Err(CliError::NotConverged(report.maxlik.evaluations));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
