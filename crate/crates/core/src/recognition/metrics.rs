use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::RankedPrediction;
use crate::metrics::{Counts, Prf};
use crate::vocab::ComponentId;

/// Fraction of instances whose gold class is ranked within the top `k`, for
/// each `k` in `ks`. An empty test set scores 1.0.
pub fn top_k_accuracy<S: AsRef<str>>(predictions: &[RankedPrediction], gold: &[S], ks: &[usize]) -> Vec<(usize, f64)> {
    assert_eq!(predictions.len(), gold.len(), "one prediction per gold label");
    let ranks: Vec<Option<usize>> = predictions
        .iter()
        .zip(gold)
        .map(|(p, g)| p.rank_of(g.as_ref()))
        .collect();
    ks.iter()
        .map(|&k| {
            if ranks.is_empty() {
                return (k, 1.0);
            }
            let hits = ranks.iter().filter(|r| r.is_some_and(|r| r <= k)).count();
            (k, hits as f64 / ranks.len() as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentMetrics {
    pub counts: Counts,
    pub scores: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiLabelReport {
    pub instances: usize,
    pub counts: Counts,
    pub micro: Prf,
    /// Unweighted mean over components present in gold or predictions.
    pub macro_avg: Prf,
    pub per_component: BTreeMap<ComponentId, ComponentMetrics>,
}

/// Micro P/R/F1 over `(instance, component)` pairs, with per-component and
/// macro figures alongside. Duplicate ids within one set count once.
pub fn evaluate_multilabel(predicted: &[Vec<ComponentId>], gold: &[Vec<ComponentId>]) -> MultiLabelReport {
    assert_eq!(predicted.len(), gold.len(), "one prediction per gold set");
    let mut total = Counts::default();
    let mut per: BTreeMap<ComponentId, Counts> = BTreeMap::new();
    for (p, g) in predicted.iter().zip(gold) {
        let p: BTreeSet<_> = p.iter().copied().collect();
        let g: BTreeSet<_> = g.iter().copied().collect();
        for &c in p.union(&g) {
            let entry = per.entry(c).or_default();
            match (p.contains(&c), g.contains(&c)) {
                (true, true) => {
                    entry.tp += 1;
                    total.tp += 1;
                }
                (true, false) => {
                    entry.fp += 1;
                    total.fp += 1;
                }
                _ => {
                    entry.fn_ += 1;
                    total.fn_ += 1;
                }
            }
        }
    }

    let per_component: BTreeMap<_, _> = per
        .into_iter()
        .map(|(c, counts)| {
            (
                c,
                ComponentMetrics {
                    counts,
                    scores: counts.prf(),
                },
            )
        })
        .collect();
    let macro_avg = if per_component.is_empty() {
        Prf::from_counts(0, 0, 0)
    } else {
        let n = per_component.len() as f64;
        let sum = |f: fn(&Prf) -> f64| per_component.values().map(|m| f(&m.scores)).sum::<f64>() / n;
        Prf {
            precision: sum(|p| p.precision),
            recall: sum(|p| p.recall),
            f1: sum(|p| p.f1),
        }
    };

    MultiLabelReport {
        instances: gold.len(),
        counts: total,
        micro: total.prf(),
        macro_avg,
        per_component,
    }
}
