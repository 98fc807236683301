use alloc::boxed::Box;
use alloc::vec::Vec;

use super::config::{cosine_lr, TrainConfig};
use super::optim::Optimizer;
use super::regularizer::{batch_regularizer, exact_tnn, rank_from_gamma, reg_feature_gradient, RegularizerState};
use super::LrflError;
use crate::data::{BatchIterator, LabeledDataset};
use crate::model::{self, bce_loss, ModelParams};
use crate::rng::{self, Purpose};

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Example-weighted mean of the minibatch objectives.
    pub loss: f64,
    /// Exact truncated nuclear norm of the training features after the epoch.
    pub tnn_exact: f64,
    pub lr: f64,
    /// Whether the cached singular vectors were refreshed before this epoch.
    pub refreshed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainLog {
    pub refresh_period: usize,
    pub rank_t: usize,
    pub records: Vec<EpochRecord>,
}

/// Parameters and log as of the last completed epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub log: TrainLog,
}

/// A failed run, with the last good state when one exists.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainFailure {
    pub error: LrflError,
    pub last_good: Option<Box<Checkpoint>>,
}

impl From<LrflError> for TrainFailure {
    fn from(error: LrflError) -> Self {
        Self { error, last_good: None }
    }
}

/// Minibatch objective: mean BCE of the batch plus the batch share of the
/// approximate truncated nuclear norm. `rows` are the training-set positions
/// of the batch examples.
pub fn batch_loss(
    params: &ModelParams,
    x_batch: &crate::linalg::DenseMatrix,
    y_batch: &crate::linalg::DenseMatrix,
    rows: &[usize],
    state: &RegularizerState,
) -> Result<f64, LrflError> {
    let cache = model::forward(params, x_batch)?;
    Ok(bce_loss(&cache.probabilities, y_batch)? + batch_regularizer(&cache.features, rows, state)?)
}

/// Trains on every row of `dataset`.
///
/// Before the first epoch the singular vectors of the initial training
/// features are cached. Epochs are numbered from 1; whenever the epoch number
/// is a multiple of `refresh_period` the features are recomputed on the full
/// training set and the cache refreshed before that epoch's minibatches.
pub fn train(dataset: &LabeledDataset, config: &TrainConfig) -> Result<(ModelParams, TrainLog), TrainFailure> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(LrflError::InvalidConfig("training set is empty".into()).into());
    }
    let x = dataset.features();
    let y = dataset.labels();
    let n = dataset.len();

    let mut init_rng = rng::stream(config.seed, Purpose::ParamInit, 0);
    let mut params = ModelParams::init(
        config.extractor,
        dataset.input_dim(),
        dataset.n_classes(),
        &mut init_rng,
    )
    .map_err(LrflError::from)?;
    let rank_t = rank_from_gamma(config.gamma, n, params.feature_dim())?;
    let first_trainable = if config.freeze_extractor {
        params.extractor_tensor_count()
    } else {
        0
    };

    let initial = model::extract_features(&params, x).map_err(LrflError::from)?;
    let mut state = RegularizerState::from_features(&initial, rank_t, config.eta_reg, config.refresh_period, 0)?;
    let mut optimizer = Optimizer::new(config.optimizer, config.momentum, config.weight_decay, &params);
    let all_rows: Vec<usize> = (0..n).collect();
    let mut log = TrainLog {
        refresh_period: config.refresh_period,
        rank_t,
        records: Vec::with_capacity(config.epochs),
    };

    for epoch in 1..=config.epochs {
        let snapshot = Checkpoint {
            params: params.clone(),
            log: log.clone(),
        };
        let fail = |error: LrflError| TrainFailure {
            error,
            last_good: Some(Box::new(snapshot.clone())),
        };

        let refreshed = epoch % config.refresh_period == 0;
        if refreshed {
            let f = model::extract_features(&params, x).map_err(|e| fail(e.into()))?;
            state.refresh(&f, epoch).map_err(fail)?;
        }
        let lr = cosine_lr(epoch - 1, config).map_err(fail)?;

        let mut weighted_loss = 0.0;
        let batches =
            BatchIterator::new(&all_rows, config.batch_size, config.seed, epoch as u32).map_err(|e| fail(e.into()))?;
        for rows in batches {
            let step = || -> Result<(f64, model::Gradients), LrflError> {
                let xb = x.row_slice(&rows)?;
                let yb = y.row_slice(&rows)?;
                let cache = model::forward(&params, &xb)?;
                let loss = bce_loss(&cache.probabilities, &yb)? + batch_regularizer(&cache.features, &rows, &state)?;
                let reg_grad = reg_feature_gradient(&state, &rows)?;
                let grads = model::grads_from_cache(&params, &xb, &cache, &yb, &reg_grad)?;
                Ok((loss, grads))
            };
            let (loss, grads) = step().map_err(fail)?;
            weighted_loss += loss * rows.len() as f64;
            optimizer.step(&mut params, &grads, lr, first_trainable);
        }
        let loss = weighted_loss / n as f64;
        if !loss.is_finite() {
            return Err(fail(LrflError::NonFiniteLoss { epoch }));
        }
        if !params.is_finite() {
            return Err(fail(LrflError::NonFiniteParams { epoch }));
        }

        let f = model::extract_features(&params, x).map_err(|e| fail(e.into()))?;
        let tnn_exact = exact_tnn(&f, rank_t).map_err(fail)?;
        log.records.push(EpochRecord {
            epoch,
            loss,
            tnn_exact,
            lr,
            refreshed,
        });
    }
    Ok((params, log))
}
