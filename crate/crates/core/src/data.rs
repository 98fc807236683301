//! Labeled datasets, seeded splits, k-fold partitions, minibatch order and
//! the planted-subspace generator.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{DenseMatrix, LinalgError};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub enum DataError {
    RowMismatch { features: usize, labels: usize },
    NonBinaryLabel { row: usize, col: usize, value: f64 },
    ClassNameCount { expected: usize, got: usize },
    InvalidFraction(f64),
    InvalidFolds { k: usize, len: usize },
    InvalidBatchSize,
    InvalidParameter(String),
    Linalg(LinalgError),
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::RowMismatch { features, labels } => {
                write!(f, "row count mismatch: {features} feature rows vs {labels} label rows")
            }
            DataError::NonBinaryLabel { row, col, value } => {
                write!(f, "non-binary label {value} at row {row}, column {col}")
            }
            DataError::ClassNameCount { expected, got } => {
                write!(f, "expected {expected} class names, got {got}")
            }
            DataError::InvalidFraction(v) => write!(f, "fraction {v} outside (0, 1]"),
            DataError::InvalidFolds { k, len } => {
                write!(f, "cannot split {len} indices into {k} folds")
            }
            DataError::InvalidBatchSize => write!(f, "batch size must be positive"),
            DataError::InvalidParameter(msg) => f.write_str(msg),
            DataError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DataError {}

impl From<LinalgError> for DataError {
    fn from(e: LinalgError) -> Self {
        DataError::Linalg(e)
    }
}

/// Features `n × d` paired with binary labels `n × C`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: DenseMatrix,
    labels: DenseMatrix,
    class_names: Vec<String>,
}

impl LabeledDataset {
    /// Validates row agreement and that every label is exactly 0 or 1. When
    /// `class_names` is `None` classes are named `class0`, `class1`, ...
    pub fn new(
        features: DenseMatrix,
        labels: DenseMatrix,
        class_names: Option<Vec<String>>,
    ) -> Result<Self, DataError> {
        if features.rows() != labels.rows() {
            return Err(DataError::RowMismatch {
                features: features.rows(),
                labels: labels.rows(),
            });
        }
        for i in 0..labels.rows() {
            for (j, &v) in labels.row(i).iter().enumerate() {
                if v != 0.0 && v != 1.0 {
                    return Err(DataError::NonBinaryLabel {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        let class_names = match class_names {
            Some(names) if names.len() != labels.cols() => {
                return Err(DataError::ClassNameCount {
                    expected: labels.cols(),
                    got: names.len(),
                })
            }
            Some(names) => names,
            None => (0..labels.cols()).map(|c| format!("class{c}")).collect(),
        };
        Ok(Self {
            features,
            labels,
            class_names,
        })
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn labels(&self) -> &DenseMatrix {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.cols()
    }

    /// The rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, DataError> {
        Ok(Self {
            features: self.features.row_slice(indices)?,
            labels: self.labels.row_slice(indices)?,
            class_names: self.class_names.clone(),
        })
    }
}

/// How [`make_splits`] carves up `0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitFractions {
    /// Share of all rows held out for validation, in `[0, 1)`.
    pub val: f64,
    /// Share of all rows held out for testing, in `[0, 1)`.
    pub test: f64,
    /// Share of the remaining training pool that is kept, in `(0, 1]`.
    pub train_subsample: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            val: 0.0,
            test: 0.0,
            train_subsample: 1.0,
        }
    }
}

/// Disjoint, sorted index sets over `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitPlan {
    pub seed: u64,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn check_fraction(v: f64) -> Result<(), DataError> {
    if v.is_finite() && v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(DataError::InvalidFraction(v))
    }
}

/// Number of items kept when taking `fraction` of `len`, at least one when
/// `len > 0`.
pub fn subsample_count(len: usize, fraction: f64) -> usize {
    if len == 0 {
        return 0;
    }
    (libm::round(fraction * len as f64) as usize).clamp(1, len)
}

/// Seeded subsample of `indices` keeping `fraction` of them, returned sorted.
pub fn subsample(indices: &[usize], fraction: f64, seed: u64) -> Result<Vec<usize>, DataError> {
    check_fraction(fraction)?;
    let mut order = indices.to_vec();
    order.shuffle(&mut rng::stream(seed, Purpose::CvSubsample, 0));
    order.truncate(subsample_count(indices.len(), fraction));
    order.sort_unstable();
    Ok(order)
}

/// Seeded split of `0..n`. Test and validation sets are carved first; the
/// training pool is then subsampled by `train_subsample`, which leaves the
/// held-out sets untouched.
pub fn make_splits(n: usize, seed: u64, fractions: SplitFractions) -> Result<SplitPlan, DataError> {
    check_fraction(fractions.train_subsample)?;
    for held in [fractions.val, fractions.test] {
        if !(held.is_finite() && (0.0..1.0).contains(&held)) {
            return Err(DataError::InvalidFraction(held));
        }
    }
    if fractions.val + fractions.test >= 1.0 {
        return Err(DataError::InvalidFraction(fractions.val + fractions.test));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, Purpose::Split, 0));
    let n_test = libm::round(fractions.test * n as f64) as usize;
    let n_val = libm::round(fractions.val * n as f64) as usize;
    let (test, rest) = order.split_at(n_test.min(n));
    let (val, pool) = rest.split_at(n_val.min(rest.len()));
    let keep = subsample_count(pool.len(), fractions.train_subsample);
    let mut plan = SplitPlan {
        seed,
        train: pool[..keep].to_vec(),
        val: val.to_vec(),
        test: test.to_vec(),
    };
    plan.train.sort_unstable();
    plan.val.sort_unstable();
    plan.test.sort_unstable();
    Ok(plan)
}

/// Training and validation rows of one fold.
pub type Fold = (Vec<usize>, Vec<usize>);

/// Seeded `k`-fold partition of `indices`. Fold sizes differ by at most one;
/// each index lands in exactly one validation part.
pub fn kfold(indices: &[usize], k: usize, seed: u64) -> Result<Vec<Fold>, DataError> {
    if k < 2 || k > indices.len() {
        return Err(DataError::InvalidFolds { k, len: indices.len() });
    }
    let mut order = indices.to_vec();
    order.shuffle(&mut rng::stream(seed, Purpose::KFold, 0));
    let base = order.len() / k;
    let extra = order.len() % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let val = order[start..start + size].to_vec();
        let train = order[..start].iter().chain(&order[start + size..]).copied().collect();
        folds.push((train, val));
        start += size;
    }
    Ok(folds)
}

/// Minibatches of one epoch: a seeded permutation of `indices` cut into
/// consecutive chunks of `batch_size`, the last one possibly shorter.
#[derive(Debug, Clone)]
pub struct BatchIterator {
    batch_size: usize,
    order: Vec<usize>,
    cursor: usize,
}

impl BatchIterator {
    pub fn new(indices: &[usize], batch_size: usize, base_seed: u64, epoch: u32) -> Result<Self, DataError> {
        if batch_size == 0 {
            return Err(DataError::InvalidBatchSize);
        }
        let mut order = indices.to_vec();
        order.shuffle(&mut rng::stream(base_seed, Purpose::BatchOrder, epoch));
        Ok(Self {
            batch_size,
            order,
            cursor: 0,
        })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

impl Iterator for BatchIterator {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.cursor >= self.order.len() {
            return None;
        }
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let batch = self.order[self.cursor..end].to_vec();
        self.cursor = end;
        Some(batch)
    }
}

/// Parameters of [`synth_planted_subspace`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantedSubspace {
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    pub k_signal: usize,
    pub noise_scale: f64,
    pub seed: u64,
}

/// Synthetic dataset whose labels depend only on a planted rank-`k_signal`
/// component of the features.
///
/// Latent codes `Z ~ N(0,1)^{n×k}` and a basis `B ~ N(0,1)^{k×d}` give the
/// signal `Z B`; features add `noise_scale · N(0,1)^{n×d}`. Each class scores
/// rows by `Z w_c` with `w_c ~ N(0,1)^k` and is positive above its median, so
/// classes are balanced.
pub fn synth_planted_subspace(p: PlantedSubspace) -> Result<LabeledDataset, DataError> {
    if p.n < 2 || p.d == 0 || p.classes == 0 {
        return Err(DataError::InvalidParameter(format!(
            "need n >= 2, d >= 1, classes >= 1 (got n={}, d={}, classes={})",
            p.n, p.d, p.classes
        )));
    }
    if p.k_signal == 0 || p.k_signal > p.d {
        return Err(DataError::InvalidParameter(format!(
            "k_signal must be in 1..={} (got {})",
            p.d, p.k_signal
        )));
    }
    if !(p.noise_scale.is_finite() && p.noise_scale >= 0.0) {
        return Err(DataError::InvalidParameter(format!(
            "noise_scale must be finite and non-negative (got {})",
            p.noise_scale
        )));
    }
    let mut rng = rng::stream(p.seed, Purpose::Synth, 0);
    let mut gauss =
        |rows: usize, cols: usize| DenseMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let latent = gauss(p.n, p.k_signal);
    let basis = gauss(p.k_signal, p.d);
    let noise = gauss(p.n, p.d);
    let label_dirs = gauss(p.k_signal, p.classes);

    let mut features = latent.matmul(&basis)?;
    if p.noise_scale > 0.0 {
        features.add_scaled(p.noise_scale, &noise)?;
    }
    let scores = latent.matmul(&label_dirs)?;
    let mut labels = DenseMatrix::zeros(p.n, p.classes);
    for c in 0..p.classes {
        let col = scores.column(c);
        let mut sorted = col.clone();
        sorted.sort_by(f64::total_cmp);
        let mid = p.n / 2;
        let median = if p.n.is_multiple_of(2) {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        for (i, &s) in col.iter().enumerate() {
            if s > median {
                labels.set(i, c, 1.0);
            }
        }
    }
    LabeledDataset::new(features, labels, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn dataset_validation() {
        let f = DenseMatrix::zeros(4, 3);
        let y = DenseMatrix::from_fn(4, 2, |i, j| ((i + j) % 2) as f64);
        let ds = LabeledDataset::new(f.clone(), y, None).unwrap();
        assert_eq!((ds.len(), ds.input_dim(), ds.n_classes()), (4, 3, 2));
        assert_eq!(ds.class_names(), &["class0", "class1"]);

        let mut bad = DenseMatrix::zeros(4, 2);
        bad.set(2, 1, 0.5);
        assert!(matches!(
            LabeledDataset::new(f.clone(), bad, None),
            Err(DataError::NonBinaryLabel { row: 2, col: 1, .. })
        ));
        assert_eq!(
            LabeledDataset::new(f, DenseMatrix::zeros(3, 2), None),
            Err(DataError::RowMismatch { features: 4, labels: 3 })
        );
    }

    #[test]
    fn split_examples() {
        let full = make_splits(100, 7, SplitFractions::default()).unwrap();
        assert_eq!(full.train, (0..100).collect::<Vec<_>>());
        let small = SplitFractions {
            train_subsample: 0.05,
            ..Default::default()
        };
        let a = make_splits(100, 7, small).unwrap();
        assert_eq!(a.train.len(), 5);
        assert_eq!(a, make_splits(100, 7, small).unwrap());
        assert_ne!(a.train, make_splits(100, 8, small).unwrap().train);
        for bad in [0.0, 1.5, -0.1, f64::NAN] {
            let fr = SplitFractions {
                train_subsample: bad,
                ..Default::default()
            };
            assert!(make_splits(100, 7, fr).is_err());
        }
    }

    #[test]
    fn held_out_sets_ignore_subsample() {
        let fr = |s| SplitFractions {
            val: 0.1,
            test: 0.2,
            train_subsample: s,
        };
        let a = make_splits(50, 3, fr(1.0)).unwrap();
        let b = make_splits(50, 3, fr(0.25)).unwrap();
        assert_eq!((a.val.len(), a.test.len(), a.train.len()), (5, 10, 35));
        assert_eq!((a.val.clone(), a.test.clone()), (b.val, b.test));
        assert_eq!(b.train.len(), 9);
        assert!(b.train.iter().all(|i| a.train.contains(i)));
    }

    #[test]
    fn kfold_sizes() {
        let idx: Vec<usize> = (0..10).collect();
        let folds = kfold(&idx, 5, 1).unwrap();
        assert!(folds.iter().all(|(t, v)| v.len() == 2 && t.len() == 8));

        let idx: Vec<usize> = (0..11).collect();
        let mut sizes: Vec<usize> = kfold(&idx, 5, 1).unwrap().iter().map(|(_, v)| v.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 3]);

        let mut all: Vec<usize> = kfold(&idx, 5, 1).unwrap().into_iter().flat_map(|(_, v)| v).collect();
        all.sort_unstable();
        assert_eq!(all, idx);

        assert!(kfold(&idx, 1, 0).is_err());
        assert!(kfold(&idx, 12, 0).is_err());
    }

    #[test]
    fn batches_cover_epoch_once_and_keep_partial() {
        let idx: Vec<usize> = (0..10).collect();
        let batches: Vec<_> = BatchIterator::new(&idx, 4, 9, 1).unwrap().collect();
        assert_eq!(batches.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 2]);
        let mut seen: Vec<usize> = batches.concat();
        seen.sort_unstable();
        assert_eq!(seen, idx);
        let again: Vec<_> = BatchIterator::new(&idx, 4, 9, 1).unwrap().collect();
        assert_eq!(batches, again);
        let other: Vec<_> = BatchIterator::new(&idx, 4, 9, 2).unwrap().collect();
        assert_ne!(batches, other);
        assert!(BatchIterator::new(&idx, 0, 9, 1).is_err());
    }

    #[test]
    fn synth_is_seeded_and_balanced() {
        let p = PlantedSubspace {
            n: 40,
            d: 8,
            classes: 3,
            k_signal: 2,
            noise_scale: 0.5,
            seed: 11,
        };
        let a = synth_planted_subspace(p).unwrap();
        assert_eq!(a, synth_planted_subspace(p).unwrap());
        for c in 0..3 {
            let pos: f64 = a.labels().column(c).iter().sum();
            assert_eq!(pos, 20.0);
        }
        let bad = PlantedSubspace { k_signal: 9, ..p };
        assert!(synth_planted_subspace(bad).is_err());
    }

    #[test]
    fn noiseless_synth_is_low_rank() {
        let p = PlantedSubspace {
            n: 60,
            d: 12,
            classes: 2,
            k_signal: 3,
            noise_scale: 0.0,
            seed: 5,
        };
        let ds = synth_planted_subspace(p).unwrap();
        let s = crate::linalg::svd(ds.features()).unwrap();
        assert!(s.sigma[3] / s.sigma[0] <= 1e-10);
        assert!(s.sigma[2] / s.sigma[0] > 1e-3);
    }

    #[test]
    fn subset_keeps_order() {
        let f = DenseMatrix::from_fn(3, 1, |i, _| i as f64);
        let y = DenseMatrix::from_fn(3, 1, |i, _| (i % 2) as f64);
        let ds = LabeledDataset::new(f, y, Some(vec!["a".into()])).unwrap();
        let s = ds.subset(&[2, 0]).unwrap();
        assert_eq!(s.features().column(0), vec![2.0, 0.0]);
        assert_eq!(s.class_names(), &["a"]);
    }
}
