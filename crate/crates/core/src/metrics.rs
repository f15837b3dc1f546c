//! Model-selection and reporting scores.
//!
//! Precision is the standard `TP / (TP + FP)`; recall is `TP / (TP + FN)`.

use serde::{Deserialize, Serialize};

use crate::error::MetricError;

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r2_score(y: &[f64], y_hat: &[f64]) -> Result<f64, MetricError> {
    if y.len() != y_hat.len() {
        return Err(MetricError::LengthMismatch(y.len(), y_hat.len()));
    }
    if y.len() < 2 {
        return Err(MetricError::Undefined("r2 needs at least two samples"));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::Undefined("r2 of a constant target"));
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// R² averaged uniformly over the columns of row-major `rows x cols` matrices.
pub fn r2_score_columns(y: &[f64], y_hat: &[f64], cols: usize) -> Result<f64, MetricError> {
    if y.len() != y_hat.len() {
        return Err(MetricError::LengthMismatch(y.len(), y_hat.len()));
    }
    if cols == 1 {
        return r2_score(y, y_hat);
    }
    let mut total = 0.0;
    for c in 0..cols {
        let yc: Vec<f64> = y.iter().skip(c).step_by(cols).copied().collect();
        let pc: Vec<f64> = y_hat.iter().skip(c).step_by(cols).copied().collect();
        total += r2_score(&yc, &pc)?;
    }
    Ok(total / cols as f64)
}

/// One-vs-rest counts for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }
}

/// Harmonic mean of precision and recall. Zero when there are no true
/// positives but some predicted or actual positives.
pub fn f1_binary(counts: &ConfusionCounts) -> Result<f64, MetricError> {
    if counts.tp == 0 {
        return if counts.fp + counts.fn_ == 0 {
            Err(MetricError::Undefined("f1 with no positive labels or predictions"))
        } else {
            Ok(0.0)
        };
    }
    let ppv = counts.precision().expect("tp > 0");
    let tpr = counts.recall().expect("tp > 0");
    Ok(2.0 * ppv * tpr / (ppv + tpr))
}

/// Square confusion matrix indexed `[true class][predicted class]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self, MetricError> {
        let k = counts.len();
        if k == 0 {
            return Err(MetricError::Empty);
        }
        if counts.iter().any(|r| r.len() != k) {
            return Err(MetricError::LengthMismatch(k, counts.iter().map(Vec::len).max().unwrap_or(0)));
        }
        Ok(Self { counts })
    }

    pub fn from_labels(y: &[usize], y_hat: &[usize], num_classes: usize) -> Result<Self, MetricError> {
        if y.len() != y_hat.len() {
            return Err(MetricError::LengthMismatch(y.len(), y_hat.len()));
        }
        if y.is_empty() || num_classes == 0 {
            return Err(MetricError::Empty);
        }
        let mut counts = vec![vec![0u64; num_classes]; num_classes];
        for (&t, &p) in y.iter().zip(y_hat) {
            if t >= num_classes || p >= num_classes {
                return Err(MetricError::Undefined("label outside the class range"));
            }
            counts[t][p] += 1;
        }
        Ok(Self { counts })
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    /// One-vs-rest counts treating `class` as positive.
    pub fn class_counts(&self, class: usize) -> ConfusionCounts {
        let tp = self.counts[class][class];
        let actual: u64 = self.counts[class].iter().sum();
        let predicted: u64 = self.counts.iter().map(|r| r[class]).sum();
        let fn_ = actual - tp;
        let fp = predicted - tp;
        ConfusionCounts { tp, fp, fn_, tn: self.total() - tp - fn_ - fp }
    }
}

/// Unweighted mean of the per-class one-vs-rest F1 scores; classes whose F1
/// is undefined count as 0.
pub fn f1_macro(confusion: &ConfusionMatrix) -> Result<f64, MetricError> {
    let k = confusion.num_classes();
    if k < 2 {
        return Err(MetricError::Undefined("macro f1 needs at least two classes"));
    }
    if confusion.total() == 0 {
        return Err(MetricError::Empty);
    }
    let sum: f64 = (0..k).map(|c| f1_binary(&confusion.class_counts(c)).unwrap_or(0.0)).sum();
    Ok(sum / k as f64)
}

/// Fraction of exactly matching labels.
pub fn accuracy(y: &[usize], y_hat: &[usize]) -> Result<f64, MetricError> {
    if y.len() != y_hat.len() {
        return Err(MetricError::LengthMismatch(y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Err(MetricError::Empty);
    }
    let hits = y.iter().zip(y_hat).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y.len() as f64)
}

/// The F1 used for model selection: positive-class (label 1) F1 for binary
/// problems, macro F1 otherwise.
pub fn f1_score(y: &[usize], y_hat: &[usize], num_classes: usize) -> Result<f64, MetricError> {
    let cm = ConfusionMatrix::from_labels(y, y_hat, num_classes)?;
    if num_classes == 2 {
        f1_binary(&cm.class_counts(1))
    } else {
        f1_macro(&cm)
    }
}

/// Index of the largest entry of each row; ties resolve to the lowest index.
pub fn argmax_rows(values: &[f64], width: usize) -> Vec<usize> {
    values
        .chunks(width)
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn r2_perfect_and_mean_predictions() {
        let y = [1.0, 4.0, 2.0, 8.0];
        assert_eq!(r2_score(&y, &y).unwrap(), 1.0);
        let mean = [3.75; 4];
        assert_eq!(r2_score(&y, &mean).unwrap(), 0.0);
    }

    #[test]
    fn r2_hand_example() {
        let r2 = r2_score(&[0.0, 1.0, 2.0], &[0.5, 1.0, 1.5]).unwrap();
        assert!((r2 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn r2_errors() {
        assert!(matches!(r2_score(&[1.0, 1.0], &[1.0, 2.0]), Err(MetricError::Undefined(_))));
        assert!(matches!(r2_score(&[1.0, 2.0], &[1.0]), Err(MetricError::LengthMismatch(2, 1))));
        assert!(r2_score(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn r2_can_be_negative() {
        assert!(r2_score(&[0.0, 1.0], &[5.0, -5.0]).unwrap() < 0.0);
    }

    #[test]
    fn f1_binary_cases() {
        let perfect = ConfusionCounts { tp: 7, fp: 0, fn_: 0, tn: 3 };
        assert_eq!(f1_binary(&perfect).unwrap(), 1.0);
        let half = ConfusionCounts { tp: 1, fp: 1, fn_: 1, tn: 0 };
        assert!((f1_binary(&half).unwrap() - 0.5).abs() < 1e-12);
        let none = ConfusionCounts { tp: 0, fp: 3, fn_: 2, tn: 1 };
        assert_eq!(f1_binary(&none).unwrap(), 0.0);
        let empty = ConfusionCounts { tp: 0, fp: 0, fn_: 0, tn: 4 };
        assert!(f1_binary(&empty).is_err());
    }

    #[test]
    fn macro_f1_hand_example() {
        let cm = ConfusionMatrix::new(vec![vec![2, 0, 0], vec![0, 1, 1], vec![0, 1, 1]]).unwrap();
        assert!((f1_macro(&cm).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_of_diagonal_is_one() {
        let cm = ConfusionMatrix::new(vec![vec![3, 0, 0], vec![0, 5, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(f1_macro(&cm).unwrap(), 1.0);
    }

    #[test]
    fn macro_f1_errors() {
        assert!(ConfusionMatrix::new(vec![]).is_err());
        let single = ConfusionMatrix::new(vec![vec![4]]).unwrap();
        assert!(f1_macro(&single).is_err());
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1], &[1, 0]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 0, 0]).unwrap(), 0.75);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn argmax_picks_first_of_ties() {
        assert_eq!(argmax_rows(&[3.0, 1.0, 0.5, 0.5], 2), vec![0, 0]);
    }

    fn labels(k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (1usize..60).prop_flat_map(move |n| (prop::collection::vec(0..k, n), prop::collection::vec(0..k, n)))
    }

    proptest! {
        #[test]
        fn r2_invariant_under_joint_permutation(
            pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..40),
            rot in 0usize..40,
        ) {
            let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(y.iter().any(|v| *v != y[0]));
            let k = rot % y.len();
            let mut yr = y.clone();
            let mut pr = p.clone();
            yr.rotate_left(k);
            pr.rotate_left(k);
            let a = r2_score(&y, &p).unwrap();
            let b = r2_score(&yr, &pr).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn r2_one_iff_exact(y in prop::collection::vec(-10.0f64..10.0, 2..30), bump in 0usize..30) {
            prop_assume!(y.iter().any(|v| *v != y[0]));
            prop_assert!((r2_score(&y, &y).unwrap() - 1.0).abs() < 1e-12);
            let mut p = y.clone();
            let i = bump % p.len();
            p[i] += 0.5;
            prop_assert!(r2_score(&y, &p).unwrap() < 1.0);
        }

        #[test]
        fn f1_binary_bounded_and_harmonic(tp in 1u64..50, fp in 0u64..50, fn_ in 0u64..50) {
            let c = ConfusionCounts { tp, fp, fn_, tn: 0 };
            let f = f1_binary(&c).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            let (p, r) = (c.precision().unwrap(), c.recall().unwrap());
            prop_assert!((f - 2.0 / (1.0 / p + 1.0 / r)).abs() < 1e-12);
        }

        #[test]
        fn binary_macro_is_mean_of_both_sides((y, p) in labels(2)) {
            let cm = ConfusionMatrix::from_labels(&y, &p, 2).unwrap();
            let both = (f1_binary(&cm.class_counts(0)).unwrap_or(0.0) + f1_binary(&cm.class_counts(1)).unwrap_or(0.0)) / 2.0;
            prop_assert!((f1_macro(&cm).unwrap() - both).abs() < 1e-12);
        }

        #[test]
        fn accuracy_is_trace_over_total((y, p) in labels(4)) {
            let cm = ConfusionMatrix::from_labels(&y, &p, 4).unwrap();
            let acc = accuracy(&y, &p).unwrap();
            prop_assert!((acc - cm.trace() as f64 / cm.total() as f64).abs() < 1e-15);
            for c in 0..4 {
                prop_assert_eq!(cm.class_counts(c).total(), y.len() as u64);
            }
        }
    }
}
