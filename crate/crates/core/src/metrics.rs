//! ROC AUC, mean AUC over classes, top-1 accuracy and per-class sensitivity.

use alloc::vec::Vec;
use core::fmt;

use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricError {
    /// Only one label value is present; AUC is undefined.
    SingleClass,
    LengthMismatch {
        scores: usize,
        labels: usize,
    },
    NonFiniteScore {
        index: usize,
    },
    AllClassesExcluded,
    Empty,
    /// The target class never occurs in the ground truth.
    AbsentClass {
        class: usize,
    },
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::SingleClass => write!(f, "AUC needs at least one positive and one negative"),
            MetricError::LengthMismatch { scores, labels } => {
                write!(f, "{scores} scores vs {labels} labels")
            }
            MetricError::NonFiniteScore { index } => write!(f, "non-finite score at index {index}"),
            MetricError::AllClassesExcluded => write!(f, "every class lacks positives or negatives"),
            MetricError::Empty => write!(f, "no rows to evaluate"),
            MetricError::AbsentClass { class } => {
                write!(f, "sensitivity undefined: class {class} has no positives")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricError {}

/// Probability that a random positive outscores a random negative, ties
/// counted one half, via the Mann-Whitney rank sum with midranks.
///
/// The rank sum is accumulated in doubled integer units so the result equals
/// direct pair counting exactly.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricError::NonFiniteScore { index });
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the rank sum of positives; ranks are 1-based, tied groups share
    // the mean rank (first + last) / 2.
    let mut rank_sum2: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let positives = order[start..end].iter().filter(|&&i| labels[i]).count() as u64;
        let midrank2 = (start as u64 + 1) + end as u64;
        rank_sum2 += positives * midrank2;
        start = end;
    }
    let u2 = rank_sum2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

/// Mean of per-class AUCs over classes that have both label values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanAuc {
    pub mean: f64,
    /// `None` for excluded classes.
    pub per_class: Vec<Option<f64>>,
    pub excluded: Vec<usize>,
}

fn label_column(labels: &DenseMatrix, c: usize) -> Vec<bool> {
    (0..labels.rows()).map(|i| labels.get(i, c) > 0.5).collect()
}

pub fn mean_auc(scores: &DenseMatrix, labels: &DenseMatrix) -> Result<MeanAuc, MetricError> {
    if scores.shape() != labels.shape() {
        return Err(MetricError::LengthMismatch {
            scores: scores.rows() * scores.cols(),
            labels: labels.rows() * labels.cols(),
        });
    }
    let mut per_class = Vec::with_capacity(scores.cols());
    let mut excluded = Vec::new();
    for c in 0..scores.cols() {
        match roc_auc(&scores.column(c), &label_column(labels, c)) {
            Ok(a) => per_class.push(Some(a)),
            Err(MetricError::SingleClass) => {
                per_class.push(None);
                excluded.push(c);
            }
            Err(e) => return Err(e),
        }
    }
    let kept: Vec<f64> = per_class.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Err(MetricError::AllClassesExcluded);
    }
    Ok(MeanAuc {
        mean: kept.iter().sum::<f64>() / kept.len() as f64,
        per_class,
        excluded,
    })
}

/// Row-wise argmax, lowest index on ties.
pub fn argmax_rows(scores: &DenseMatrix) -> Vec<usize> {
    (0..scores.rows())
        .map(|i| {
            scores
                .row(i)
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, (j, &v)| if v > best.1 { (j, v) } else { best },
                )
                .0
        })
        .collect()
}

pub fn top1_accuracy(scores: &DenseMatrix, classes: &[usize]) -> Result<f64, MetricError> {
    if scores.rows() == 0 {
        return Err(MetricError::Empty);
    }
    if scores.rows() != classes.len() {
        return Err(MetricError::LengthMismatch {
            scores: scores.rows(),
            labels: classes.len(),
        });
    }
    let hits = argmax_rows(scores).iter().zip(classes).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / classes.len() as f64)
}

/// True positives over actual positives for `target`.
pub fn sensitivity(predicted: &[usize], truth: &[usize], target: usize) -> Result<f64, MetricError> {
    if predicted.len() != truth.len() {
        return Err(MetricError::LengthMismatch {
            scores: predicted.len(),
            labels: truth.len(),
        });
    }
    let positives = truth.iter().filter(|&&t| t == target).count();
    if positives == 0 {
        return Err(MetricError::AbsentClass { class: target });
    }
    let hits = predicted
        .iter()
        .zip(truth)
        .filter(|&(&p, &t)| t == target && p == target)
        .count();
    Ok(hits as f64 / positives as f64)
}

/// Evaluation summary. Accuracy and sensitivity are filled in only when every
/// label row is one-hot (multiclass mode).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub class_names: Vec<alloc::string::String>,
    pub per_class_auc: Vec<Option<f64>>,
    pub mean_auc: f64,
    pub top1_accuracy: Option<f64>,
    pub per_class_sensitivity: Option<Vec<Option<f64>>>,
    pub n_eval: usize,
    pub excluded_classes: Vec<usize>,
}

/// Class index of each row if every row is one-hot.
pub fn one_hot_classes(labels: &DenseMatrix) -> Option<Vec<usize>> {
    (0..labels.rows())
        .map(|i| {
            let row = labels.row(i);
            let ones: Vec<usize> = row
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == 1.0)
                .map(|(j, _)| j)
                .collect();
            (ones.len() == 1 && row.iter().all(|&v| v == 0.0 || v == 1.0)).then(|| ones[0])
        })
        .collect()
}

pub fn evaluate(
    scores: &DenseMatrix,
    labels: &DenseMatrix,
    class_names: &[alloc::string::String],
) -> Result<EvalReport, MetricError> {
    let auc = mean_auc(scores, labels)?;
    let (top1_accuracy, per_class_sensitivity) = match one_hot_classes(labels) {
        Some(truth) if scores.cols() > 1 => {
            let predicted = argmax_rows(scores);
            let sens = (0..scores.cols())
                .map(|c| sensitivity(&predicted, &truth, c).ok())
                .collect();
            (Some(top1_accuracy(scores, &truth)?), Some(sens))
        }
        _ => (None, None),
    };
    Ok(EvalReport {
        class_names: class_names.to_vec(),
        per_class_auc: auc.per_class,
        mean_auc: auc.mean,
        top1_accuracy,
        per_class_sensitivity,
        n_eval: scores.rows(),
        excluded_classes: auc.excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn auc_examples() {
        let s = [0.9, 0.8, 0.3, 0.2];
        assert_eq!(roc_auc(&s, &[true, true, false, false]).unwrap(), 1.0);
        assert_eq!(roc_auc(&s, &[true, false, true, false]).unwrap(), 0.75);
        assert_eq!(roc_auc(&[0.4; 5], &[true, false, true, false, false]).unwrap(), 0.5);
        assert_eq!(roc_auc(&s, &[true; 4]), Err(MetricError::SingleClass));
        assert!(roc_auc(&[f64::NAN, 1.0], &[true, false]).is_err());
    }

    #[test]
    fn mean_auc_exclusion() {
        let scores = DenseMatrix::from_rows(&[&[0.9, 0.1, 0.3], &[0.2, 0.8, 0.3], &[0.7, 0.5, 0.3]]);
        let labels = DenseMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0]]);
        let m = mean_auc(&scores, &labels).unwrap();
        assert_eq!(m.per_class, vec![Some(1.0), Some(1.0), None]);
        assert_eq!(m.excluded, vec![2]);
        assert_eq!(m.mean, 1.0);

        let half = DenseMatrix::from_rows(&[&[0.9, 0.5], &[0.1, 0.5]]);
        let lab = DenseMatrix::from_rows(&[&[1.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(mean_auc(&half, &lab).unwrap().mean, 0.75);

        let none = DenseMatrix::zeros(3, 3);
        assert_eq!(mean_auc(&scores, &none), Err(MetricError::AllClassesExcluded));
    }

    #[test]
    fn accuracy_examples() {
        let onehot = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(top1_accuracy(&onehot, &[0, 1]).unwrap(), 1.0);
        let uniform = DenseMatrix::from_rows(&[&[0.3, 0.3, 0.3], &[0.5, 0.5, 0.5]]);
        assert_eq!(top1_accuracy(&uniform, &[0, 0]).unwrap(), 1.0);
        assert_eq!(top1_accuracy(&DenseMatrix::zeros(0, 2), &[]), Err(MetricError::Empty));
    }

    #[test]
    fn sensitivity_examples() {
        assert_eq!(sensitivity(&[1, 1, 0], &[1, 1, 0], 1).unwrap(), 1.0);
        assert_eq!(sensitivity(&[0, 0, 0], &[1, 1, 0], 1).unwrap(), 0.0);
        assert_eq!(sensitivity(&[2, 2, 2, 0, 1], &[2, 2, 2, 2, 1], 2).unwrap(), 0.75);
        assert_eq!(sensitivity(&[0], &[0], 3), Err(MetricError::AbsentClass { class: 3 }));
    }

    #[test]
    fn evaluate_multiclass() {
        let names: Vec<alloc::string::String> = ["a", "b", "c"].iter().map(|s| (*s).into()).collect();
        let labels = DenseMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0]]);
        let r = evaluate(&labels, &labels, &names).unwrap();
        assert_eq!(r.top1_accuracy, Some(1.0));
        assert_eq!(r.per_class_sensitivity, Some(vec![Some(1.0), Some(1.0), None]));
        assert_eq!(r.excluded_classes, vec![2]);
        assert_eq!(r.mean_auc, 1.0);
    }
}
