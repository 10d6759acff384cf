//! Precision / recall / F1 from raw counts.

use serde::{Deserialize, Serialize};

/// True-positive / false-positive / false-negative tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        Self { tp, fp, fn_ }
    }

    pub fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    pub fn prf(&self) -> Prf {
        Prf::from_counts(self.tp, self.tp + self.fp, self.tp + self.fn_)
    }
}

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// `predicted` and `gold` are the denominator sizes. An empty denominator
    /// yields 1.0, so empty-versus-empty scores perfectly.
    pub fn from_counts(tp: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, gold);
        Self {
            precision,
            recall,
            f1: harmonic_mean(precision, recall),
        }
    }
}

pub fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}
