use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{PosError, PosTag, PosType, TaggedSentence};
use crate::metrics::{Counts, Prf};

/// A typed span, `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Entity {
    pub start: usize,
    pub end: usize,
    pub pos_type: PosType,
}

/// Maximal `B-X (I-X)*` spans; an `I-X` that does not continue an `X` span
/// starts a new one.
pub fn extract_entities(tags: &[PosTag]) -> Vec<Entity> {
    let mut out: Vec<Entity> = Vec::new();
    let mut open: Option<Entity> = None;
    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            PosTag::I(t) if open.is_some_and(|e| e.pos_type == t) => {
                if let Some(e) = open.as_mut() {
                    e.end = i;
                }
            }
            PosTag::B(t) | PosTag::I(t) => {
                out.extend(open.take());
                open = Some(Entity {
                    start: i,
                    end: i,
                    pos_type: t,
                });
            }
            PosTag::O => out.extend(open.take()),
        }
    }
    out.extend(open);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub counts: Counts,
    pub scores: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosReport {
    pub sentences: usize,
    pub counts: Counts,
    pub micro: Prf,
    pub per_class: BTreeMap<String, ClassMetrics>,
}

/// Entity-level micro P/R/F1: a predicted entity is a true positive when the
/// gold has the same span and type.
pub fn evaluate_pos(predicted: &[Vec<PosTag>], gold: &[Vec<PosTag>]) -> Result<PosReport, PosError> {
    if predicted.len() != gold.len() {
        return Err(PosError::LengthMismatch {
            expected: gold.len(),
            actual: predicted.len(),
        });
    }
    let mut total = Counts::default();
    let mut per: BTreeMap<PosType, Counts> = BTreeMap::new();
    for (i, (p, g)) in predicted.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(PosError::SentenceLengthMismatch {
                sentence: i,
                expected: g.len(),
                actual: p.len(),
            });
        }
        let p: BTreeSet<Entity> = extract_entities(p).into_iter().collect();
        let g: BTreeSet<Entity> = extract_entities(g).into_iter().collect();
        for e in p.union(&g) {
            let c = per.entry(e.pos_type).or_default();
            match (p.contains(e), g.contains(e)) {
                (true, true) => {
                    c.tp += 1;
                    total.tp += 1;
                }
                (true, false) => {
                    c.fp += 1;
                    total.fp += 1;
                }
                _ => {
                    c.fn_ += 1;
                    total.fn_ += 1;
                }
            }
        }
    }
    Ok(PosReport {
        sentences: gold.len(),
        counts: total,
        micro: total.prf(),
        per_class: per
            .into_iter()
            .map(|(t, counts)| {
                (
                    t.name().to_string(),
                    ClassMetrics {
                        counts,
                        scores: counts.prf(),
                    },
                )
            })
            .collect(),
    })
}

/// Evaluates predictions read from a file against a gold file; the surfaces
/// must line up exactly.
pub fn evaluate_pos_sentences(predicted: &[TaggedSentence], gold: &[TaggedSentence]) -> Result<PosReport, PosError> {
    if predicted.len() != gold.len() {
        return Err(PosError::LengthMismatch {
            expected: gold.len(),
            actual: predicted.len(),
        });
    }
    for (i, (p, g)) in predicted.iter().zip(gold).enumerate() {
        if p.surfaces() != g.surfaces() {
            return Err(PosError::Misaligned { sentence: i });
        }
    }
    let p: Vec<Vec<PosTag>> = predicted.iter().map(TaggedSentence::tags).collect();
    let g: Vec<Vec<PosTag>> = gold.iter().map(TaggedSentence::tags).collect();
    evaluate_pos(&p, &g)
}
