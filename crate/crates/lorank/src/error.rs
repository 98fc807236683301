use lorank_core::analysis::AnalysisError;
use lorank_core::data::DataError;
use lorank_core::lrfl::LrflError;
use lorank_core::metrics::MetricError;
use lorank_core::model::ModelError;
use lorank_core::tuning::TuneError;
use lorank_core::LinalgError;

use crate::io::IoError;

/// Command failure, classified by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Missing, malformed or inconsistent input data, or unwritable output.
    #[error("data error: {0}")]
    Data(String),
    /// Non-convergence or non-finite values during computation.
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn config(msg: impl std::fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn data(msg: impl std::fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<LinalgError> for CliError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::NoConvergence { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::InvalidFraction(_)
            | DataError::InvalidFolds { .. }
            | DataError::InvalidBatchSize
            | DataError::InvalidParameter(_) => CliError::Config(e.to_string()),
            DataError::Linalg(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Shape(inner) => inner.into(),
            ModelError::InvalidSpec(msg) => CliError::Config(msg),
        }
    }
}

impl From<LrflError> for CliError {
    fn from(e: LrflError) -> Self {
        if e.is_numerical() {
            return CliError::Numerical(e.to_string());
        }
        match e {
            LrflError::Linalg(inner) => inner.into(),
            LrflError::Model(inner) => inner.into(),
            LrflError::Data(inner) => inner.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Linalg(inner) => inner.into(),
            AnalysisError::ZeroLabelColumn { .. } | AnalysisError::InvalidSpectrum { .. } => {
                CliError::Data(e.to_string())
            }
            AnalysisError::RankOutOfRange { .. } | AnalysisError::InvalidParameter(_) => {
                CliError::Config(e.to_string())
            }
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TuneError> for CliError {
    fn from(e: TuneError) -> Self {
        match e {
            TuneError::EmptyGrid | TuneError::InvalidGrid(_) => CliError::Config(e.to_string()),
            TuneError::Data(inner) => inner.into(),
            TuneError::Lrfl(inner) => inner.into(),
            TuneError::Metric(inner) => inner.into(),
            TuneError::AllCellsFailed => CliError::Numerical(e.to_string()),
        }
    }
}
