//! Precision / recall / F1 with explicit zero-denominator conventions.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Classification quality summary.
///
/// Conventions: precision is 0 when nothing was predicted positive, recall
/// is 0 when no positive labels exist, and F1 is 0 whenever either is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

/// Confusion counts for a binary task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Counts {
    pub fn metrics<T: Real>(&self) -> Metrics<T> {
        let tp = T::from_usize(self.tp).expect("count");
        let predicted = self.tp + self.fp;
        let labeled = self.tp + self.fn_;
        let precision = if predicted == 0 {
            T::zero()
        } else {
            tp / T::from_usize(predicted).expect("count")
        };
        let recall = if labeled == 0 {
            T::zero()
        } else {
            tp / T::from_usize(labeled).expect("count")
        };
        let f1 = if precision == T::zero() || recall == T::zero() {
            T::zero()
        } else {
            T::of(2.0) * precision * recall / (precision + recall)
        };
        Metrics {
            precision,
            recall,
            f1,
        }
    }
}

/// Metrics of a selected set against a ground-truth set.
pub fn set_metrics<T: Real, I: std::hash::Hash + Eq>(
    selected: &HashSet<I>,
    truth: &HashSet<I>,
) -> Metrics<T> {
    let tp = selected.intersection(truth).count();
    Counts {
        tp,
        fp: selected.len() - tp,
        fn_: truth.len() - tp,
        tn: 0,
    }
    .metrics()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let m: Metrics<f64> = Counts {
            tp: 10,
            fp: 0,
            fn_: 0,
            tn: 5,
        }
        .metrics();
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn all_negative_predictions_on_mixed_labels() {
        let m: Metrics<f64> = Counts {
            tp: 0,
            fp: 0,
            fn_: 7,
            tn: 3,
        }
        .metrics();
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn hand_computed_point_eight() {
        let m: Metrics<f64> = Counts {
            tp: 8,
            fp: 2,
            fn_: 2,
            tn: 0,
        }
        .metrics();
        assert!((m.precision - 0.8).abs() < 1e-12);
        assert!((m.recall - 0.8).abs() < 1e-12);
        assert!((m.f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn set_metrics_counts_overlap() {
        let selected: HashSet<&str> = ["a", "b", "c"].into_iter().collect();
        let truth: HashSet<&str> = ["b", "c", "d", "e"].into_iter().collect();
        let m: Metrics<f64> = set_metrics(&selected, &truth);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall - 0.5).abs() < 1e-12);
    }
}
