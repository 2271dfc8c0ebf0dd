//! `tour`: build, check, export, benchmark and serve tours.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 environment error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bench;
mod build;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dtour::TourError;

#[derive(Parser, Debug)]
#[command(name = "tour", version, about = "Smooth tours through 2D projections of high-dimensional data")]
struct Cli {
    /// Config file; defaults to ./dtour.toml when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a tour file from data.
    Build(BuildArgs),
    /// Re-check a tour file's bases.
    Validate(ValidateArgs),
    /// Write the projection at one tour position.
    Project(ProjectArgs),
    /// Measure projection throughput and path evaluation latency.
    Bench(BenchArgs),
    /// Serve a tour to the browser UI.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Little,
    Le,
    Grand,
    Sequential,
}

/// CSV column roles shared by commands that read data.
#[derive(Args, Debug, Clone, Default)]
pub struct ColumnArgs {
    /// CSV columns read as categorical labels.
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    /// CSV columns read as continuous labels.
    #[arg(long, value_delimiter = ',')]
    continuous: Option<Vec<String>>,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// CSV or DTC1 data.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    strategy: Option<Strategy>,
    /// Principal components (little) or eigenvectors (le).
    #[arg(long)]
    components: Option<usize>,
    /// Neighbors per point for the le graph.
    #[arg(long)]
    knn: Option<usize>,
    /// Keyframe count for le and grand.
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// none, zscore or unit_range.
    #[arg(long)]
    standardize: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Directory of ordered 2-column embedding CSVs (sequential).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Shell command run once per step to write each embedding (sequential).
    #[arg(long)]
    producer: Option<String>,
    /// Producer invocations.
    #[arg(long)]
    steps: Option<usize>,
    /// Point limit for the le graph.
    #[arg(long)]
    max_points: Option<usize>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    tour: PathBuf,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    tour: Option<PathBuf>,
    /// Tour position; wrapped into [0, 1) on cyclic tours, clamped otherwise.
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or dtc1; inferred from the output extension by default.
    #[arg(long)]
    format: Option<String>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Benchmark on this data instead of generated points.
    #[arg(long)]
    points_file: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Timed full projections.
    #[arg(long)]
    iterations: Option<usize>,
    /// Keyframes in the path timed by the basis_at benchmark.
    #[arg(long)]
    keyframes: Option<usize>,
    /// Dimension of the path timed by the basis_at benchmark.
    #[arg(long)]
    basis_dims: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    tour: Option<PathBuf>,
    #[arg(long)]
    host: Option<String>,
    #[arg(long, env = "DTOUR_PORT")]
    port: Option<u16>,
    /// Open a browser once listening.
    #[arg(long)]
    open: bool,
    /// Static UI bundle directory.
    #[arg(long, env = "DTOUR_UI_DIR")]
    ui: Option<PathBuf>,
    /// Where client snapshot requests are written.
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
    /// Seed for grand-mode walks and preview sampling.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    columns: ColumnArgs,
}

/// A failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Environment(String),
    Tour(TourError),
}

impl From<TourError> for CliError {
    fn from(e: TourError) -> Self {
        CliError::Tour(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Environment(_) => 3,
            CliError::Tour(e) => match e {
                TourError::InvalidArgument(_) => 2,
                TourError::Io(_) | TourError::FileIo { .. } | TourError::BindFailure { .. } => 3,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Environment(m) => f.write_str(m),
            CliError::Tour(e) => write!(f, "{e}"),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

pub fn required<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let result = config::load(cli.config.as_deref())
        .map_err(CliError::Usage)
        .and_then(|cfg| match cli.command {
            Command::Build(a) => build::run(a, cfg.build),
            Command::Validate(a) => run::validate(a),
            Command::Project(a) => run::project(a, cfg.project),
            Command::Bench(a) => bench::run(a, cfg.bench),
            Command::Serve(a) => run::serve(a, cfg.serve),
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
