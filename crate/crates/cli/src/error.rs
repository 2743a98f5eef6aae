use std::path::PathBuf;

use kronred::baseline::BaselineError;
use kronred::io::IoError;
use kronred::metrics::MetricsError;
use kronred::network::NetworkError;
use kronred::phasor::PhasorError;
use kronred::reduction::ReductionError;
use kronred::simulation::SimulationError;
use serde_json::{json, Value};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_APPLICABILITY: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: IoError },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Phasor(#[from] PhasorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("experiment observations failed: {0}")]
    Observation(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Read { .. } | CliError::Write { .. } => "IoError",
            CliError::File { source, .. } => match source {
                IoError::Parse { .. } => "ParseError",
                IoError::Schema(_) => "SchemaError",
                IoError::Csv(_) => "CsvError",
                IoError::Io(_) => "IoError",
            },
            CliError::Network(e) => e.kind(),
            CliError::Input(_) => "InvalidInput",
            CliError::Usage(_) => "UsageError",
            CliError::Reduction(ReductionError::NotHomogeneous(_)) => "NotHomogeneous",
            CliError::Reduction(ReductionError::InconsistentInitialCondition(_))
            | CliError::Simulation(SimulationError::InconsistentInitialCondition(_)) => "InconsistentInitialCondition",
            CliError::Reduction(_) => "ReductionError",
            CliError::Simulation(SimulationError::InvalidConfig(_) | SimulationError::InvalidExcitation(_)) => "InvalidInput",
            CliError::Simulation(_) => "SimulationError",
            CliError::Baseline(BaselineError::NegativeSynthesizedElement { .. }) => "NegativeSynthesizedElement",
            CliError::Baseline(BaselineError::GammaDimension { .. }) => "InvalidInput",
            CliError::Baseline(_) => "BaselineError",
            CliError::Phasor(PhasorError::InvalidFrequency(_) | PhasorError::DimensionMismatch { .. }) => "InvalidInput",
            CliError::Phasor(_) => "PhasorError",
            CliError::Metrics(_) => "InvalidInput",
            CliError::Observation(_) => "ObservationFailed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "NotHomogeneous" | "NegativeSynthesizedElement" => EXIT_APPLICABILITY,
            "UsageError" => EXIT_USAGE,
            "ReductionError" | "SimulationError" | "BaselineError" | "PhasorError" | "ObservationFailed" => EXIT_FAILURE,
            _ => EXIT_INPUT,
        }
    }

    /// Machine-readable diagnostic written to stderr.
    pub fn diagnostic(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        if let CliError::File {
            path,
            source: IoError::Parse { line, column, .. },
        } = self
        {
            v["path"] = json!(path);
            v["line"] = json!(line);
            v["column"] = json!(column);
        }
        v
    }
}
