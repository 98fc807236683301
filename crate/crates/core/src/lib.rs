//! Low-rank feature learning.
//!
//! Trains linear and shallow classifiers on feature matrices while penalizing
//! the truncated nuclear norm of the learned features, using a separable
//! approximation built from cached singular vectors that are refreshed every
//! few epochs. Alongside the trainer the crate carries the spectral
//! diagnostics used to inspect feature matrices (eigen-projection of labels,
//! signal concentration, kernel complexity, generalization-bound terms) and a
//! cross-validation driver for the rank ratio and regularization weight.
//!
//! The crate is `no_std` + `alloc`. Every transcendental function goes through
//! [`libm`] so results are bitwise identical with and without the `std`
//! feature. File formats and the command-line tool live in the `lorank` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod data;
pub mod linalg;
pub mod lrfl;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod tuning;

pub use data::{LabeledDataset, SplitPlan};
pub use linalg::{DenseMatrix, LinalgError, SvdFactors};
pub use lrfl::{train, TrainConfig, TrainLog};
pub use model::ModelParams;
