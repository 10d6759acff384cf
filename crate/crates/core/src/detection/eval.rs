use serde::{Deserialize, Serialize};

use super::BoundingBox;
use crate::metrics::Prf;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvalConfig {
    pub iou_threshold: f64,
}

impl Default for DetectionEvalConfig {
    fn default() -> Self {
        Self { iou_threshold: 0.5 }
    }
}

impl DetectionEvalConfig {
    pub fn new(iou_threshold: f64) -> Option<Self> {
        (iou_threshold > 0.0 && iou_threshold <= 1.0).then_some(Self { iou_threshold })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl DetectionScores {
    fn from_counts(tp: usize, predicted: usize, gold: usize) -> Self {
        let prf = Prf::from_counts(tp, predicted, gold);
        Self {
            precision: prf.precision,
            recall: prf.recall,
            f1: prf.f1,
            true_positives: tp,
            predicted,
            gold,
        }
    }
}

/// Intersection over union; 0 when either box is empty.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = a.right().min(b.right()) - a.x.max(b.x);
    let ih = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Greedy one-to-one matching: candidate pairs at or above the threshold are
/// taken in descending IoU order (ties by prediction then gold index).
pub fn greedy_matches(pred: &[BoundingBox], gold: &[BoundingBox], threshold: f64) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gold.iter().enumerate() {
            let v = iou(p, g);
            if v >= threshold {
                pairs.push((v, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut pred_used = vec![false; pred.len()];
    let mut gold_used = vec![false; gold.len()];
    let mut matches = Vec::new();
    for (_, i, j) in pairs {
        if !pred_used[i] && !gold_used[j] {
            pred_used[i] = true;
            gold_used[j] = true;
            matches.push((i, j));
        }
    }
    matches
}

pub fn evaluate_detection(pred: &[BoundingBox], gold: &[BoundingBox], cfg: &DetectionEvalConfig) -> DetectionScores {
    let tp = greedy_matches(pred, gold, cfg.iou_threshold).len();
    DetectionScores::from_counts(tp, pred.len(), gold.len())
}

/// Micro-averaged over slips: true positives and box counts are summed first.
pub fn evaluate_detection_batch<'a, I>(pairs: I, cfg: &DetectionEvalConfig) -> DetectionScores
where
    I: IntoIterator<Item = (&'a [BoundingBox], &'a [BoundingBox])>,
{
    let (mut tp, mut n_pred, mut n_gold) = (0, 0, 0);
    for (pred, gold) in pairs {
        tp += greedy_matches(pred, gold, cfg.iou_threshold).len();
        n_pred += pred.len();
        n_gold += gold.len();
    }
    DetectionScores::from_counts(tp, n_pred, n_gold)
}
