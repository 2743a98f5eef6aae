//! `kronred` command-line front end.
//!
//! Every subcommand returns a process exit code: 0 on success, 1 on a numerical or
//! runtime failure, 2 on invalid input, 3 when the requested model does not apply to the
//! network, and 64 on a usage error. Failures print a JSON diagnostic on stderr.

mod commands;
mod error;
mod files;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kronred::benchmark::Which;
use kronred::reduction::PStrategy;

pub use error::{CliError, EXIT_APPLICABILITY, EXIT_FAILURE, EXIT_INPUT, EXIT_OK, EXIT_USAGE};

/// Environment variable that overrides the manifest's γ seed.
pub const SEED_ENV: &str = "KRONRED_SEED";

#[derive(Debug, Parser)]
#[command(name = "kronred", version, about = "Exact time-domain Kron reduction of RL networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a network file and report its structure.
    Validate { network: PathBuf },
    /// Build the reduced model and write it as JSON.
    Reduce {
        network: PathBuf,
        #[arg(long, value_enum, default_value = "tree")]
        p_strategy: StrategyArg,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a run manifest and write trajectory CSVs.
    Simulate(SimulateArgs),
    /// Compare the injection columns of two trajectory CSVs.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Comma-separated column names; all `i_*` columns of the reference by default.
        #[arg(long, value_delimiter = ',')]
        channels: Option<Vec<String>>,
        /// Start of the steady-state window in seconds; last 10% of the span by default.
        #[arg(long)]
        from_time: Option<f64>,
    },
    /// Kron-reduce the admittance at one frequency and solve for boundary currents.
    Phasor {
        network: PathBuf,
        /// Angular frequency in rad/s.
        #[arg(long)]
        omega: f64,
        /// Boundary voltage phasors as `magnitude@degrees`, in boundary order.
        #[arg(long, value_delimiter = ',', required = true)]
        v1: Vec<String>,
    },
    /// Run the wye-network comparison of the exact reduction against the heuristic baseline.
    PaperExperiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "reduced")]
    pub method: Method,
    /// Synthesis frequency of the baseline in rad/s.
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Scalar circulating-current coefficient; repeat for several baseline runs.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Vec<f64>,
    /// Full coefficient vector for one baseline run, comma separated; may be repeated.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_vector: Vec<String>,
    /// Number of γ draws when no coefficients are given.
    #[arg(long, default_value_t = kronred::benchmark::GAMMA_DRAWS)]
    pub draws: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep synthesized elements with negative resistance or non-positive inductance.
    #[arg(long)]
    pub allow_unphysical: bool,
    /// Oracle trajectory CSV for the baseline summary; the DAE oracle is run when omitted.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Start of the steady-state window for the baseline summary.
    #[arg(long)]
    pub from_time: Option<f64>,
    /// Use a saved reduced model instead of reducing the manifest's network.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory; overrides the manifest.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub which: WhichArg,
    #[arg(long, default_value = "paper-experiment")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 30.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 10)]
    pub record_stride: usize,
    #[arg(long, value_enum, default_value = "tree")]
    pub p_strategy: StrategyArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Reduced,
    Dae,
    Homogeneous,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Tree,
    Nullbasis,
    Modal,
}

impl From<StrategyArg> for PStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Tree => PStrategy::TreeElimination,
            StrategyArg::Nullbasis => PStrategy::OrthonormalNullBasis,
            StrategyArg::Modal => PStrategy::ModalDiagonalizing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WhichArg {
    Sinusoid,
    Step,
}

impl From<WhichArg> for Which {
    fn from(w: WhichArg) -> Self {
        match w {
            WhichArg::Sinusoid => Which::Sinusoid,
            WhichArg::Step => Which::Step,
        }
    }
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            e.exit_code()
        }
    }
}
