//! Low-rank feature learning: the truncated nuclear norm penalty, its
//! separable minibatch form, and the training loop that keeps the cached
//! singular vectors fresh.

mod config;
mod optim;
mod regularizer;
mod train;

use alloc::string::String;
use core::fmt;

pub use config::{cosine_lr, OptimizerKind, Preset, Schedule, TrainConfig};
pub use optim::{Optimizer, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use regularizer::{
    approx_tnn, batch_regularizer, exact_tnn, full_regularizer, rank_from_gamma, reg_feature_gradient, tail_sums,
    RegularizerState,
};
pub use train::{batch_loss, train, Checkpoint, EpochRecord, TrainFailure, TrainLog};

use crate::data::DataError;
use crate::linalg::LinalgError;
use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub enum LrflError {
    Linalg(LinalgError),
    Model(ModelError),
    Data(DataError),
    InvalidConfig(String),
    RankOutOfRange { rank: usize, max: usize },
    EpochOutOfRange { epoch: usize, epochs: usize },
    NonFiniteLoss { epoch: usize },
    NonFiniteParams { epoch: usize },
}

impl LrflError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            LrflError::Linalg(LinalgError::NoConvergence { .. })
                | LrflError::NonFiniteLoss { .. }
                | LrflError::NonFiniteParams { .. }
        )
    }
}

impl fmt::Display for LrflError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LrflError::Linalg(e) => write!(f, "{e}"),
            LrflError::Model(e) => write!(f, "{e}"),
            LrflError::Data(e) => write!(f, "{e}"),
            LrflError::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            LrflError::RankOutOfRange { rank, max } => write!(f, "rank {rank} exceeds min(n, d) = {max}"),
            LrflError::EpochOutOfRange { epoch, epochs } => {
                write!(f, "epoch {epoch} outside 0..{epochs}")
            }
            LrflError::NonFiniteLoss { epoch } => write!(f, "non-finite loss in epoch {epoch}"),
            LrflError::NonFiniteParams { epoch } => write!(f, "non-finite parameters after epoch {epoch}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LrflError {}

impl From<LinalgError> for LrflError {
    fn from(e: LinalgError) -> Self {
        LrflError::Linalg(e)
    }
}

impl From<ModelError> for LrflError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Shape(inner) => LrflError::Linalg(inner),
            other => LrflError::Model(other),
        }
    }
}

impl From<DataError> for LrflError {
    fn from(e: DataError) -> Self {
        LrflError::Data(e)
    }
}
