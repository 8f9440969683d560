//! `narrownet`: compile, evaluate and verify deep narrow ReLU networks.
//!
//! Exit codes: 0 all assertions pass, 1 an assertion failed, 2 usage or input error,
//! 3 resource budget exceeded.

mod commands;
mod report;
mod target;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use narrownet::{Error, OutputMode};

#[derive(Parser)]
#[command(name = "narrownet", version, about = "Deep, narrow ReLU nets with exact width/depth guarantees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a net for a target and write it with a verification report.
    Compile(CompileArgs),
    /// Evaluate a net on the rows of a CSV file.
    Eval(EvalArgs),
    /// Measure a net against a target and check width/depth/error bounds.
    Verify(VerifyArgs),
    /// Sweep k (convex targets) or eps (Lipschitz targets) and tabulate errors.
    Rate(RateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Width d+1: tangent-plane fit or given max-affine pieces.
    Convex,
    /// Width d+3: DC file, or interpolate and split a named target.
    Dc,
    /// Width d+3: interpolate to accuracy eps, split, compile.
    Continuous,
    /// Width d+2: rewrite a one-hidden-layer net.
    Deepen,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputArg {
    Relu,
    Linear,
}

impl From<OutputArg> for OutputMode {
    fn from(o: OutputArg) -> Self {
        match o {
            OutputArg::Relu => OutputMode::ReluReadout,
            OutputArg::Linear => OutputMode::LinearReadout,
        }
    }
}

#[derive(Args, Clone)]
pub struct ScanArgs {
    /// Error scan: grid:N (N points per axis) or random:COUNT[,seed=S]. Default: ~10^4-point grid.
    #[arg(long)]
    pub scan: Option<String>,
    /// Seed for random scans (overrides a seed given in --scan).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct CompileArgs {
    /// Builtin name (optionally name:key=val,...), vertex-file:PATH, dc-file:PATH or shallow-file:PATH.
    #[arg(long)]
    pub target: String,
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Input dimension for builtin targets (file targets carry their own).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Accuracy for interpolation-based modes.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Number of tangent planes for convex fits.
    #[arg(long)]
    pub k: Option<usize>,
    /// Where to write the net file.
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the JSON report (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Lattice vertex budget (default: $NARROWNET_BUDGET or 2^24).
    #[arg(long)]
    pub budget_vertices: Option<u128>,
    #[arg(long, value_enum, default_value = "relu")]
    pub output_mode: OutputArg,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub net: PathBuf,
    /// CSV with a header row and one input point per row.
    #[arg(long)]
    pub points: PathBuf,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    pub scan: ScanArgs,
    /// Largest acceptable sup error.
    #[arg(long, default_value_t = narrownet::DEFAULT_TOL)]
    pub max_error: f64,
    #[arg(long)]
    pub expect_width: Option<usize>,
    #[arg(long)]
    pub expect_blocks: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args)]
pub struct RateArgs {
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Comma-separated piece counts (convex targets).
    #[arg(long, value_delimiter = ',', conflicts_with = "eps")]
    pub k: Vec<usize>,
    /// Comma-separated accuracies (Lipschitz targets).
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[command(flatten)]
    pub scan: ScanArgs,
    #[arg(long)]
    pub budget_vertices: Option<u128>,
    #[arg(long, value_enum, default_value = "relu")]
    pub output_mode: OutputArg,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure modes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Assertion(String),
    Usage(Error),
    Resource(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Resource { .. } => Failure::Resource(e),
            other => Failure::Usage(other),
        }
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Assertion(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Resource(_) => 3,
        }
    }

    fn to_json(&self) -> String {
        let (kind, message) = match self {
            Failure::Assertion(m) => ("assertion", m.clone()),
            Failure::Usage(e) => (error_kind(e), e.to_string()),
            Failure::Resource(e) => ("resource", e.to_string()),
        };
        serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DimensionMismatch { .. } => "dimension",
        Error::NonFinite(_) => "non-finite",
        Error::InvalidArgument(_) => "invalid-argument",
        Error::Validation(_) => "validation",
        Error::Parse(_) => "parse",
        Error::Resource { .. } => "resource",
        Error::ClampingHazard(_) => "clamping-hazard",
        Error::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(a) => commands::compile(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Rate(a) => commands::rate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}
