//! Command-line front end for `structret`.
//!
//! Exit statuses: 0 success, 1 usage error, 2 data error, 3 every database
//! entry rejected the query.

use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

mod commands;
pub mod io;
pub mod manifest;

pub use manifest::RunManifest;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_REJECTED: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] structret::Error),
    #[error("every database entry rejected the query")]
    AllRejected,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) | CliError::Core(_) => EXIT_DATA,
            CliError::AllRejected => EXIT_REJECTED,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "structret",
    version,
    about = "Structure-point retrieval for point cloud completion"
)]
pub struct Cli {
    /// Where to write the run manifest.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a database from a directory of complete clouds.
    BuildDb(BuildDbArgs),
    /// Complete a partial cloud against a database.
    Complete(CompleteArgs),
    /// Rank database entries for a partial cloud.
    Retrieve(RetrieveArgs),
    /// Compare two clouds with a distance metric.
    Eval(EvalArgs),
    /// Write an entry's envelope as a heat-colored PLY.
    ExportEnvelope(ExportArgs),
    /// Letter-grid counterexamples for Chamfer and one-sided Chamfer.
    Demo,
    /// Generate synthetic complete shapes (and optional crops).
    Synth(SynthArgs),
    /// Replay the command recorded in a manifest.
    Rerun {
        #[arg(value_name = "MANIFEST")]
        from: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct BuildDbArgs {
    /// Directory of .xyz/.ply files; first-level subdirectories name categories.
    #[arg(long)]
    pub input: PathBuf,
    /// Database JSON to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = structret::DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = structret::DEFAULT_LAMBDA, value_parser = positive)]
    pub lambda: f64,
    /// Default rejection threshold stored in the database [default: 0.05/λ³].
    #[arg(long, value_parser = non_negative)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Center and scale each cloud into the unit cube first.
    #[arg(long)]
    pub normalize: bool,
}

/// Thresholds and filters shared by retrieval commands.
#[derive(Debug, Args)]
pub struct MatchArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// Partial cloud (.xyz or .ply).
    #[arg(long)]
    pub input: PathBuf,
    /// Rejection threshold [default: from the database].
    #[arg(long, value_parser = non_negative)]
    pub gamma: Option<f64>,
    /// Backward-selection threshold [default: the rejection threshold].
    #[arg(long, value_parser = non_negative)]
    pub gamma_back: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Only match entries of this category.
    #[arg(long)]
    pub category: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    /// Center and scale the input into the unit cube first.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("rate").required(true).args(["missing_rate", "estimate_rate"])))]
pub struct CompleteArgs {
    #[command(flatten)]
    pub m: MatchArgs,
    /// Completed cloud to write (.ply or .xyz).
    #[arg(long)]
    pub output: PathBuf,
    /// Known fraction of the shape that is missing, in [0, 1).
    #[arg(long, value_parser = rate)]
    pub missing_rate: Option<f64>,
    /// Estimate the missing rate by sweeping a grid.
    #[arg(long)]
    pub estimate_rate: bool,
    /// Sweep grid for --estimate-rate [default: 0.05,0.10,..,0.75].
    #[arg(long, value_delimiter = ',', value_parser = rate, requires = "estimate_rate")]
    pub grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = structret::DEFAULT_OUTPUT_POINTS)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[command(flatten)]
    pub m: MatchArgs,
    #[arg(long, value_parser = rate)]
    pub missing_rate: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Cd,
    Emd,
    Pregt,
}

impl From<MetricArg> for structret::Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Cd => structret::Metric::Chamfer,
            MetricArg::Emd => structret::Metric::Emd,
            MetricArg::Pregt => structret::Metric::PreGt,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted cloud (the "from" side of pregt).
    pub a: PathBuf,
    /// Reference cloud.
    pub b: PathBuf,
    #[arg(long, value_enum, default_value = "cd")]
    pub metric: MetricArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleOn {
    /// The entry's own source cloud.
    Source,
    /// A regular grid around the entry.
    Grid,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long)]
    pub entry: String,
    /// PLY file to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "source")]
    pub on: SampleOn,
    /// Grid samples per axis for `--on grid`.
    #[arg(long, default_value_t = 32)]
    pub resolution: usize,
    /// Normalize the source cloud as `build-db --normalize` did.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for complete shapes, one subdirectory per kind.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub count: usize,
    #[arg(long, default_value_t = 2048)]
    pub points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write a random half-space crop of every shape here.
    #[arg(long)]
    pub partial: Option<PathBuf>,
    /// Fraction of points each crop keeps.
    #[arg(long, default_value_t = 0.5, value_parser = keep_fraction)]
    pub keep: f64,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be > 0, got {v}"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be >= 0, got {v}"))
    }
}

fn rate(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("missing rate must be in [0, 1), got {v}"))
    }
}

fn keep_fraction(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("must be in (0, 1], got {v}"))
    }
}

/// Runs the tool on `args` (without the program name) and returns the exit
/// status. Normal output goes to `out`, diagnostics to `err`.
pub fn main_with_args(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let cli = match Cli::try_parse_from(std::iter::once("structret".to_owned()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match run(&cli, args, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Executes a parsed command line. `args` is recorded in the manifest.
pub fn run(cli: &Cli, args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let manifest = cli.manifest.as_deref();
    match &cli.command {
        Command::BuildDb(a) => commands::build_db(a, args, manifest, out, err),
        Command::Complete(a) => commands::complete(a, args, manifest, out),
        Command::Retrieve(a) => commands::retrieve_cmd(a, args, manifest, out),
        Command::Eval(a) => commands::eval(a, args, manifest, out),
        Command::ExportEnvelope(a) => commands::export_envelope(a, args, manifest, out),
        Command::Demo => commands::demo(args, manifest, out),
        Command::Synth(a) => commands::synth(a, args, manifest, out),
        Command::Rerun { from } => {
            let m = RunManifest::read(from)?;
            if m.args.first().is_some_and(|a| a == "rerun") {
                return Err(CliError::Usage("manifest records a rerun; refusing to recurse".into()));
            }
            let replay = Cli::try_parse_from(std::iter::once("structret".to_owned()).chain(m.args.iter().cloned()))
                .map_err(|e| CliError::Usage(format!("manifest arguments no longer parse: {e}")))?;
            run(&replay, &m.args, out, err)
        }
    }
}
