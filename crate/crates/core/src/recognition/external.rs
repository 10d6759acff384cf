//! Scores produced by other models, one JSON object per line:
//!
//! ```text
//! {"id": "a1", "scores": {"初": 0.9, "之": 0.1}}
//! {"id": "a2", "component_scores": {"12": 0.8, "40": 0.3}}
//! ```
//!
//! Component keys are vocabulary component ids written as decimal strings.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::subchar::select_components;
use super::{ComponentScore, RankedPrediction};
use crate::vocab::ComponentId;

#[derive(Debug, Error)]
pub enum ExternalScoresError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExternalScores {
    Classes(RankedPrediction),
    Components(Vec<ComponentScore>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalRecord {
    pub id: String,
    pub scores: ExternalScores,
}

impl ExternalRecord {
    pub fn ranking(&self) -> Option<&RankedPrediction> {
        match &self.scores {
            ExternalScores::Classes(r) => Some(r),
            ExternalScores::Components(_) => None,
        }
    }

    /// Components at or above `threshold`, else the top one.
    pub fn components(&self, threshold: f64) -> Option<Vec<ComponentScore>> {
        match &self.scores {
            ExternalScores::Components(s) => Some(select_components(s, threshold, false)),
            ExternalScores::Classes(_) => None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    scores: Option<BTreeMap<String, f64>>,
    component_scores: Option<BTreeMap<String, f64>>,
}

fn parse_record(text: &str, line: usize) -> Result<ExternalRecord, ExternalScoresError> {
    let malformed = |message: String| ExternalScoresError::Malformed { line, message };
    let raw: RawRecord = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let scores = match (raw.scores, raw.component_scores) {
        (Some(classes), None) => {
            if classes.is_empty() {
                return Err(malformed("empty scores".into()));
            }
            if classes.values().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(malformed("class scores must be finite and non-negative".into()));
            }
            let total: f64 = classes.values().sum();
            if total <= 0.0 {
                return Err(malformed("class scores sum to zero".into()));
            }
            ExternalScores::Classes(RankedPrediction::from_confidences(
                classes.into_iter().map(|(c, p)| (c, p / total)).collect(),
            ))
        }
        (None, Some(components)) => {
            if components.is_empty() {
                return Err(malformed("empty component_scores".into()));
            }
            let mut parsed = components
                .into_iter()
                .map(|(k, score)| {
                    let id: ComponentId = k.parse().map_err(|_| malformed(format!("component key {k:?} is not an id")))?;
                    if !(0.0..=1.0).contains(&score) {
                        return Err(malformed(format!("component score {score} outside [0, 1]")));
                    }
                    Ok(ComponentScore { id, score })
                })
                .collect::<Result<Vec<_>, _>>()?;
            parsed.sort_by_key(|s| s.id);
            if parsed.windows(2).any(|w| w[0].id == w[1].id) {
                return Err(malformed("duplicate component id".into()));
            }
            ExternalScores::Components(parsed)
        }
        _ => return Err(malformed("expected exactly one of scores, component_scores".into())),
    };
    Ok(ExternalRecord { id: raw.id, scores })
}

/// Parses a JSON Lines score file; class scores are renormalized to sum to 1.
pub fn read_external_scores(reader: impl BufRead) -> Result<Vec<ExternalRecord>, ExternalScoresError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(&line, i + 1)?;
        if !seen.insert(record.id.clone()) {
            return Err(ExternalScoresError::DuplicateId(record.id));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn load_external_scores(path: impl AsRef<Path>) -> Result<Vec<ExternalRecord>, ExternalScoresError> {
    read_external_scores(BufReader::new(File::open(path)?))
}
