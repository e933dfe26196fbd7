mod commands;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Failure, Output};
use record::{write_atomic, RunRecord};

#[derive(Parser, Debug)]
#[command(name = "specshift", version, about = "Spectral shift functions, Witten indices and spectral flow")]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Recorded in the run record. Every command is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Convergence tolerance for iterative estimates.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Exit with status 3 on warnings or non-convergence.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SsfMethod {
    Count,
    Det,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WittenMethod {
    Resolvent,
    Semigroup,
    Closed,
    Ssf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral shift function of a matrix pair `{"H0": .., "H": ..}`.
    Ssf {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SsfMethod::Count)]
        method: SsfMethod,
        /// Imaginary offset for the determinant route.
        #[arg(long)]
        eps: Option<f64>,
        /// Sampling grid `lo:hi:n` for the determinant route.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Witten index of a path scenario.
    Witten {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = WittenMethod::Resolvent)]
        method: WittenMethod,
    },
    /// Spectral flow and the index identities.
    Flow { input: PathBuf },
    /// Principal trace formula residuals.
    Ptf {
        input: PathBuf,
        /// Comma-separated negative spectral parameters.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-0.25, -1.0, -4.0])]
        z: Vec<f64>,
    },
    /// Both sides of Pushnitski's formula.
    Push {
        input: PathBuf,
        /// Grid `lo:hi:n` of positive lambda.
        #[arg(long, default_value = "0.25:4:61")]
        grid: String,
    },
    /// Dirac operator `-i d/dx + f` on a circle.
    Dirac1d {
        input: PathBuf,
        /// Averaging window `a,b`; defaults to the central half band.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 2)]
        window: Option<Vec<f64>>,
        /// Also estimate the resolvent Witten index with `Nt` nodes.
        #[arg(long)]
        witten_nt: Option<usize>,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ssf { .. } => "ssf",
            Command::Witten { .. } => "witten",
            Command::Flow { .. } => "flow",
            Command::Ptf { .. } => "ptf",
            Command::Push { .. } => "push",
            Command::Dirac1d { .. } => "dirac1d",
        }
    }

    fn input(&self) -> &PathBuf {
        match self {
            Command::Ssf { input, .. }
            | Command::Witten { input, .. }
            | Command::Flow { input }
            | Command::Ptf { input, .. }
            | Command::Push { input, .. }
            | Command::Dirac1d { input, .. } => input,
        }
    }
}

fn run(cli: &Cli) -> Result<(RunRecord, Output), Failure> {
    let start = Instant::now();
    let path = cli.command.input();
    let bytes = std::fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let flags: Vec<String> = std::env::args().skip(1).collect();
    let mut record = RunRecord::new(cli.command.name(), flags, &bytes);
    let output = match &cli.command {
        Command::Ssf { method, eps, grid, .. } => commands::ssf(&text, *method, *eps, grid.as_deref())?,
        Command::Witten { method, .. } => commands::witten(&text, *method, cli.tol)?,
        Command::Flow { .. } => commands::flow(&text)?,
        Command::Ptf { z, .. } => commands::ptf(&text, z)?,
        Command::Push { grid, .. } => commands::push(&text, grid)?,
        Command::Dirac1d { window, witten_nt, horizon, .. } => {
            commands::dirac1d(&text, window.as_deref(), *witten_nt, *horizon)?
        }
    };
    record.results = output.json.clone();
    record.warnings = output.warnings.clone();
    record.finish(start.elapsed());
    Ok((record, output))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (record, output) = match run(&cli) {
        Ok(r) => r,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&record).expect("record serializes") + "\n",
        Format::Csv => record.csv_header() + &output.csv,
    };
    match &cli.out {
        Some(p) => {
            if let Err(e) = write_atomic(p, &text) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    if output.failed_contract {
        eprintln!("error: {}", output.contract_message);
        return ExitCode::from(3);
    }
    if cli.strict && (!output.converged || !record.warnings.is_empty()) {
        eprintln!("error: --strict: result is not converged or carries warnings");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
