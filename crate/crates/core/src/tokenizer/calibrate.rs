use std::collections::HashSet;

use serde::Serialize;

use super::{CropRecognition, Token, TokenizeError};
use crate::corpus::GlyphLabel;
use crate::metrics::Prf;
use crate::vocab::Vocabulary;

/// θ ∈ {0.00, 0.05, …, 1.00}.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationObjective {
    TokenAccuracy,
    PosF1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdCalibration {
    pub best: f64,
    /// `(θ, objective)` per grid point, in grid order.
    pub curve: Vec<(f64, f64)>,
}

/// Evaluates `objective` at each grid point and keeps the best θ, preferring
/// the smallest on ties.
pub fn calibrate_threshold(grid: &[f64], objective: impl Fn(f64) -> f64) -> Result<ThresholdCalibration, TokenizeError> {
    if grid.is_empty() {
        return Err(TokenizeError::EmptyGrid);
    }
    if let Some(&bad) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(TokenizeError::InvalidThreshold(bad));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let curve: Vec<(f64, f64)> = sorted.iter().map(|&t| (t, objective(t))).collect();
    let best = curve
        .iter()
        .copied()
        .reduce(|best, p| if p.1 > best.1 { p } else { best })
        .map(|p| p.0)
        .expect("grid is non-empty");
    Ok(ThresholdCalibration { best, curve })
}

/// Whether `token` counts as correct for `gold`; `None` for unknown gold.
///
/// A character token must name the gold modern character. A sub-character
/// token needs component F1 ≥ 0.5 against the gold items.
pub fn token_correct(token: &Token, gold: &GlyphLabel, vocab: &Vocabulary) -> Option<bool> {
    match (gold, token) {
        (GlyphLabel::Unknown, _) => None,
        (GlyphLabel::Modern { text }, Token::Char { key, .. }) => Some(key == text),
        (GlyphLabel::Components { items, .. }, Token::SubChar { components }) => {
            let predicted: HashSet<_> = components.iter().map(|c| c.id).collect();
            let gold_ids: HashSet<_> = items.iter().filter_map(|i| vocab.component_id(i)).collect();
            let tp = predicted.intersection(&gold_ids).count();
            let f1 = Prf::from_counts(tp, predicted.len(), items.len()).f1;
            Some(f1 >= 0.5)
        }
        _ => Some(false),
    }
}

/// Fraction of non-unknown gold positions whose token is correct.
pub fn token_accuracy(tokens: &[Token], gold: &[GlyphLabel], vocab: &Vocabulary) -> f64 {
    assert_eq!(tokens.len(), gold.len(), "one token per gold label");
    let judged: Vec<bool> = tokens
        .iter()
        .zip(gold)
        .filter_map(|(t, g)| token_correct(t, g, vocab))
        .collect();
    if judged.is_empty() {
        return 1.0;
    }
    judged.iter().filter(|&&ok| ok).count() as f64 / judged.len() as f64
}

/// Calibrates θ for token accuracy over precomputed crop recognitions.
pub fn calibrate_token_accuracy(
    crops: &[CropRecognition],
    gold: &[GlyphLabel],
    vocab: &Vocabulary,
    grid: &[f64],
) -> Result<ThresholdCalibration, TokenizeError> {
    if crops.is_empty() {
        return Err(TokenizeError::EmptyValidation);
    }
    assert_eq!(crops.len(), gold.len(), "one crop per gold label");
    calibrate_threshold(grid, |theta| {
        let tokens: Vec<Token> = crops.iter().map(|c| c.token(theta, false)).collect();
        token_accuracy(&tokens, gold, vocab)
    })
}
