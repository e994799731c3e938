//! `sse`: secure state estimation from the command line.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sse_core::Strategy;

/// Exit status categories.
#[derive(Debug)]
pub enum Failure {
    Infeasible(String),
    Input(anyhow::Error),
    Cap(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Infeasible(_) => 2,
            Failure::Input(_) => 3,
            Failure::Cap(_) => 4,
        }
    }
}

impl From<sse_core::Error> for Failure {
    fn from(e: sse_core::Error) -> Self {
        use sse_core::Error as E;
        match e {
            E::CapExceeded { .. } | E::IterationCap(_) => Failure::Cap(e.into()),
            E::Dimension(_)
            | E::InvalidModel(_)
            | E::InvalidArgument(_)
            | E::SampleCount { .. }
            | E::EmptySensorSet
            | E::Precondition(_) => Failure::Input(e.into()),
            other => Failure::Other(other.into()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(
    name = "sse",
    version,
    about = "Secure state estimation under sparse sensor attacks"
)]
pub struct Cli {
    /// Seed for every random choice (default 0; a scenario file's own seed when simulating).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sparse observability, kernel dimensions and robustness constants of a model.
    Observability(ObservabilityArgs),
    /// Estimate state and attacked sensors from the last window of a trace.
    Estimate(EstimateArgs),
    /// Closed-loop vehicle run under a scenario; writes the trace CSV.
    Simulate(SimulateArgs),
    /// Iteration-count sweeps over generated instances; writes CSV.
    Bench(BenchArgs),
    /// Exhaustive search over attack supports on the last window of a trace.
    Oracle(OracleArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Trivial,
    Conflict,
    ConflictAgree,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Trivial => Strategy::Trivial,
            StrategyArg::Conflict => Strategy::Conflict,
            StrategyArg::ConflictAgree => Strategy::ConflictAgree,
        }
    }
}

#[derive(Args, Debug)]
pub struct ObservabilityArgs {
    pub model: PathBuf,
    /// Largest s to test for s-sparse observability (default p - 1).
    #[arg(long)]
    pub max_s: Option<usize>,
    /// Sensors an attacker may corrupt, e.g. `1,2`; all when omitted.
    #[arg(long, value_delimiter = ',')]
    pub attackable: Option<Vec<usize>>,
    /// Pseudo-inverse for rank-deficient honest-set Gram matrices.
    #[arg(long)]
    pub allow_singular: bool,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Subset enumeration cap.
    #[arg(long, default_value_t = sse_core::combinatorics::DEFAULT_SUBSET_CAP)]
    pub cap: u128,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    pub model: PathBuf,
    /// CSV with columns `y1..yp` and `u1..um` (or `u` when m = 1).
    pub trace: PathBuf,
    #[arg(long, value_enum, default_value_t = StrategyArg::ConflictAgree)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Search for the smallest attack support instead of any within budget.
    #[arg(long)]
    pub minimal_support: bool,
    /// Skip the shrink pass on conflict certificates.
    #[arg(long)]
    pub no_shrink: bool,
    #[arg(long)]
    pub max_iterations: Option<u64>,
    /// Last row of the window (0-based); the final row when omitted.
    #[arg(long)]
    pub end_row: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub scenario: PathBuf,
    /// Override the scenario's step count.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    pub spec: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    pub model: PathBuf,
    pub trace: PathBuf,
    /// Largest support to enumerate; the model's budget when omitted.
    #[arg(long)]
    pub s_bar: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long)]
    pub end_row: Option<usize>,
    #[arg(long, default_value_t = sse_core::oracle::ORACLE_CAP)]
    pub cap: u128,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Observability(a) => commands::observability(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Simulate(a) => commands::simulate(a, cli.seed),
        Command::Bench(a) => commands::bench(a, cli.seed),
        Command::Oracle(a) => commands::oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Infeasible(msg) => eprintln!("infeasible: {msg}"),
                Failure::Input(e) => eprintln!("input error: {e:#}"),
                Failure::Cap(e) => eprintln!("cap exceeded: {e:#}"),
                Failure::Other(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}
