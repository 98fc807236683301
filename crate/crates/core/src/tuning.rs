//! Cross-validated selection of the rank ratio and regularization weight,
//! plus the rank-sweep and small-data experiment drivers.
//!
//! [`tune`] is split into [`prepare`], [`run_job`] and [`aggregate`] so a
//! caller can run the independent (γ, η, fold) jobs in parallel; the result
//! does not depend on the order in which jobs finish.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::data::{kfold, subsample, DataError, Fold, LabeledDataset};
use crate::lrfl::{train, LrflError, TrainConfig};
use crate::metrics::{mean_auc, MetricError};
use crate::model::predict_proba;

pub const DEFAULT_GAMMAS: [f64; 8] = [0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.15, 0.2];
pub const DEFAULT_ETAS: [f64; 5] = [5e-4, 1e-3, 2.5e-3, 5e-3, 1e-2];

#[derive(Debug, Clone, PartialEq)]
pub enum TuneError {
    EmptyGrid,
    InvalidGrid(String),
    Data(DataError),
    AllCellsFailed,
    Lrfl(LrflError),
    Metric(MetricError),
}

impl fmt::Display for TuneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TuneError::EmptyGrid => f.write_str("grid has no cells"),
            TuneError::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            TuneError::Data(e) => write!(f, "{e}"),
            TuneError::AllCellsFailed => f.write_str("training failed in every grid cell"),
            TuneError::Lrfl(e) => write!(f, "{e}"),
            TuneError::Metric(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TuneError {}

impl From<DataError> for TuneError {
    fn from(e: DataError) -> Self {
        TuneError::Data(e)
    }
}

impl From<LrflError> for TuneError {
    fn from(e: LrflError) -> Self {
        TuneError::Lrfl(e)
    }
}

impl From<MetricError> for TuneError {
    fn from(e: MetricError) -> Self {
        TuneError::Metric(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct GridSpec {
    pub gamma_values: Vec<f64>,
    pub eta_values: Vec<f64>,
    pub folds: usize,
    /// Share of the training data used for cross-validation.
    pub cv_fraction: f64,
    /// Seeds the CV subsample and the fold assignment.
    pub seed: u64,
    /// Epoch budget for each CV training run.
    pub cv_epochs: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            gamma_values: DEFAULT_GAMMAS.to_vec(),
            eta_values: DEFAULT_ETAS.to_vec(),
            folds: 5,
            cv_fraction: 0.2,
            seed: 0,
            cv_epochs: 20,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), TuneError> {
        if self.gamma_values.is_empty() || self.eta_values.is_empty() {
            return Err(TuneError::EmptyGrid);
        }
        if self.folds < 2 {
            return Err(TuneError::InvalidGrid("folds must be at least 2".into()));
        }
        if self.cv_epochs == 0 {
            return Err(TuneError::InvalidGrid("cv_epochs must be positive".into()));
        }
        if !(self.cv_fraction.is_finite() && self.cv_fraction > 0.0 && self.cv_fraction <= 1.0) {
            return Err(TuneError::InvalidGrid("cv_fraction must be in (0, 1]".into()));
        }
        if self
            .gamma_values
            .iter()
            .any(|g| !(g.is_finite() && *g > 0.0 && *g <= 1.0))
        {
            return Err(TuneError::InvalidGrid("gamma values must be in (0, 1]".into()));
        }
        if self.eta_values.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(TuneError::InvalidGrid("eta values must be non-negative".into()));
        }
        Ok(())
    }
}

/// Mean validation mAUC of one (γ, η) pair. A cell with any failed fold has
/// no score.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellScore {
    pub gamma: f64,
    pub eta: f64,
    pub mean_score: Option<f64>,
    pub fold_scores: Vec<Option<f64>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TuneResult {
    pub best_gamma: f64,
    pub best_eta: f64,
    pub best_score: f64,
    /// Cells in grid order, γ outer and η inner.
    pub cells: Vec<CellScore>,
    pub cv_size: usize,
}

/// One training run of the grid search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Job {
    pub gamma_index: usize,
    pub eta_index: usize,
    pub fold: usize,
}

/// Everything needed to run the jobs of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct TunePlan {
    pub grid: GridSpec,
    pub base: TrainConfig,
    /// Rows of the training set used for cross-validation, sorted.
    pub cv_indices: Vec<usize>,
    /// `(train, val)` row lists per fold.
    pub folds: Vec<Fold>,
    pub jobs: Vec<Job>,
}

pub fn prepare(dataset: &LabeledDataset, grid: &GridSpec, base: &TrainConfig) -> Result<TunePlan, TuneError> {
    grid.validate()?;
    let all: Vec<usize> = (0..dataset.len()).collect();
    let cv_indices = subsample(&all, grid.cv_fraction, grid.seed)?;
    let folds = kfold(&cv_indices, grid.folds, grid.seed)?;
    let mut jobs = Vec::with_capacity(grid.gamma_values.len() * grid.eta_values.len() * grid.folds);
    for gamma_index in 0..grid.gamma_values.len() {
        for eta_index in 0..grid.eta_values.len() {
            for fold in 0..grid.folds {
                jobs.push(Job {
                    gamma_index,
                    eta_index,
                    fold,
                });
            }
        }
    }
    Ok(TunePlan {
        grid: grid.clone(),
        base: base.clone(),
        cv_indices,
        folds,
        jobs,
    })
}

/// Training configuration of a grid cell.
pub fn cell_config(plan: &TunePlan, gamma: f64, eta: f64) -> TrainConfig {
    TrainConfig {
        gamma,
        eta_reg: eta,
        epochs: plan.grid.cv_epochs,
        ..plan.base.clone()
    }
}

/// Trains on `train_rows` and returns the mean AUC on `eval_rows`.
pub fn fit_and_score(
    dataset: &LabeledDataset,
    train_rows: &[usize],
    eval: &LabeledDataset,
    config: &TrainConfig,
) -> Result<f64, TuneError> {
    let train_set = dataset.subset(train_rows)?;
    let (params, _) = train(&train_set, config).map_err(|f| f.error)?;
    let scores = predict_proba(&params, eval.features()).map_err(LrflError::from)?;
    Ok(mean_auc(&scores, eval.labels())?.mean)
}

/// Validation mAUC of one job.
pub fn run_job(dataset: &LabeledDataset, plan: &TunePlan, job: Job) -> Result<f64, TuneError> {
    let config = cell_config(
        plan,
        plan.grid.gamma_values[job.gamma_index],
        plan.grid.eta_values[job.eta_index],
    );
    let (train_rows, val_rows) = &plan.folds[job.fold];
    let val = dataset.subset(val_rows)?;
    fit_and_score(dataset, train_rows, &val, &config)
}

/// Combines job outcomes, given in the order of `plan.jobs`, into a result.
/// The best cell has the highest mean score; ties go to the smaller γ, then
/// the smaller η.
pub fn aggregate(plan: &TunePlan, outcomes: &[Result<f64, TuneError>]) -> Result<TuneResult, TuneError> {
    assert_eq!(outcomes.len(), plan.jobs.len(), "one outcome per job");
    let grid = &plan.grid;
    let mut cells: Vec<CellScore> = grid
        .gamma_values
        .iter()
        .flat_map(|&gamma| {
            grid.eta_values.iter().map(move |&eta| CellScore {
                gamma,
                eta,
                mean_score: None,
                fold_scores: alloc::vec![None; grid.folds],
                failure: None,
            })
        })
        .collect();
    for (job, outcome) in plan.jobs.iter().zip(outcomes) {
        let cell = &mut cells[job.gamma_index * grid.eta_values.len() + job.eta_index];
        match outcome {
            Ok(score) => cell.fold_scores[job.fold] = Some(*score),
            Err(e) => {
                if cell.failure.is_none() {
                    cell.failure = Some(e.to_string());
                }
            }
        }
    }

    for cell in &mut cells {
        if cell.failure.is_some() {
            continue;
        }
        let scores: Option<Vec<f64>> = cell.fold_scores.iter().copied().collect();
        if let Some(scores) = scores {
            cell.mean_score = Some(scores.iter().sum::<f64>() / scores.len() as f64);
        }
    }
    select(cells, plan.cv_indices.len())
}

fn select(cells: Vec<CellScore>, cv_size: usize) -> Result<TuneResult, TuneError> {
    let mut best: Option<&CellScore> = None;
    for cell in &cells {
        let Some(score) = cell.mean_score else { continue };
        let replace = match best {
            None => true,
            Some(b) => {
                let bs = b.mean_score.expect("scored");
                score > bs || (score == bs && (cell.gamma, cell.eta) < (b.gamma, b.eta))
            }
        };
        if replace {
            best = Some(cell);
        }
    }
    let best = best.ok_or(TuneError::AllCellsFailed)?;
    let (best_gamma, best_eta, best_score) = (best.gamma, best.eta, best.mean_score.expect("scored"));
    Ok(TuneResult {
        best_gamma,
        best_eta,
        best_score,
        cells,
        cv_size,
    })
}

/// Runs every job sequentially.
pub fn tune(dataset: &LabeledDataset, grid: &GridSpec, base: &TrainConfig) -> Result<TuneResult, TuneError> {
    let plan = prepare(dataset, grid, base)?;
    let outcomes: Vec<_> = plan.jobs.iter().map(|&job| run_job(dataset, &plan, job)).collect();
    aggregate(&plan, &outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankSweepRow {
    pub gamma: f64,
    pub rank_t: usize,
    pub mean_auc: f64,
}

/// One full training run per γ on `train`, each evaluated on `test`.
pub fn rank_sweep(
    train_set: &LabeledDataset,
    test: &LabeledDataset,
    gammas: &[f64],
    base: &TrainConfig,
) -> Result<Vec<RankSweepRow>, TuneError> {
    gammas
        .iter()
        .map(|&gamma| {
            let config = TrainConfig { gamma, ..base.clone() };
            let (params, log) = train(train_set, &config).map_err(|f| f.error)?;
            let scores = predict_proba(&params, test.features()).map_err(LrflError::from)?;
            Ok(RankSweepRow {
                gamma,
                rank_t: log.rank_t,
                mean_auc: mean_auc(&scores, test.labels())?.mean,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmallDataRow {
    pub fraction: f64,
    pub n_train: usize,
    pub baseline_mean_auc: f64,
    pub lrfl_mean_auc: f64,
}

/// For each fraction, trains an unregularized baseline (η = 0) and the
/// configured arm on the same seeded subsample of `train` and scores both on
/// all of `test`.
pub fn small_data_experiment(
    train_set: &LabeledDataset,
    test: &LabeledDataset,
    fractions: &[f64],
    base: &TrainConfig,
) -> Result<Vec<SmallDataRow>, TuneError> {
    let all: Vec<usize> = (0..train_set.len()).collect();
    fractions
        .iter()
        .map(|&fraction| {
            let rows = subsample(&all, fraction, base.seed)?;
            let baseline = TrainConfig {
                eta_reg: 0.0,
                ..base.clone()
            };
            Ok(SmallDataRow {
                fraction,
                n_train: rows.len(),
                baseline_mean_auc: fit_and_score(train_set, &rows, test, &baseline)?,
                lrfl_mean_auc: fit_and_score(train_set, &rows, test, base)?,
            })
        })
        .collect()
}
