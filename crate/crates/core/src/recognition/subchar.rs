use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{cosine, FeatureVector};
use super::metrics::evaluate_multilabel;
use super::RecognitionError;
use crate::vocab::{ComponentId, Vocabulary};

/// Mapped-score threshold used when no validation set is supplied.
pub const DEFAULT_COMPONENT_THRESHOLD: f64 = 0.88;

const SUBCHAR_MODEL_FORMAT: &str = "chutok-subchar-recognizer";
const MODEL_VERSION: u32 = 1;

/// Candidate thresholds 0.50, 0.51, …, 0.95.
pub fn threshold_grid() -> Vec<f64> {
    (50..=95).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentScore {
    pub id: ComponentId,
    /// Mapped similarity `(s + 1) / 2` in `[0, 1]`.
    pub score: f64,
}

/// Multi-label prototype matcher over sub-character components.
#[derive(Debug, Clone, PartialEq)]
pub struct SubCharRecognizer {
    components: Vec<ComponentId>,
    prototypes: Vec<FeatureVector>,
    threshold: f64,
}

#[derive(Serialize, Deserialize)]
struct SubCharModelFile {
    format: String,
    version: u32,
    threshold: f64,
    components: Vec<ComponentId>,
    prototypes: Vec<Vec<f64>>,
}

impl SubCharRecognizer {
    pub fn new(components: Vec<ComponentId>, prototypes: Vec<FeatureVector>, threshold: f64) -> Result<Self, RecognitionError> {
        if components.len() != prototypes.len() {
            return Err(RecognitionError::InvalidModel(format!(
                "{} components but {} prototypes",
                components.len(),
                prototypes.len()
            )));
        }
        if components.is_empty() {
            return Err(RecognitionError::EmptyTrainingSet);
        }
        if !components.windows(2).all(|w| w[0] < w[1]) {
            return Err(RecognitionError::InvalidModel("component ids must be strictly increasing".into()));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(RecognitionError::InvalidModel(format!("threshold {threshold} outside [0, 1]")));
        }
        Ok(Self {
            components,
            prototypes,
            threshold,
        })
    }

    pub fn components(&self) -> &[ComponentId] {
        &self.components
    }

    pub fn prototypes(&self) -> &[FeatureVector] {
        &self.prototypes
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self, RecognitionError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(RecognitionError::InvalidModel(format!("threshold {threshold} outside [0, 1]")));
        }
        self.threshold = threshold;
        Ok(self)
    }

    /// Mapped score for every known component, in id order.
    pub fn scores(&self, features: &FeatureVector) -> Vec<ComponentScore> {
        self.components
            .iter()
            .zip(&self.prototypes)
            .map(|(&id, p)| ComponentScore {
                id,
                score: (cosine(p, features) + 1.0) / 2.0,
            })
            .collect()
    }

    pub fn recognize(&self, features: &FeatureVector) -> Vec<ComponentScore> {
        select_components(&self.scores(features), self.threshold, features.is_zero())
    }

    pub fn to_json(&self) -> String {
        let file = SubCharModelFile {
            format: SUBCHAR_MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            threshold: self.threshold,
            components: self.components.clone(),
            prototypes: self.prototypes.iter().map(|p| p.as_slice().to_vec()).collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RecognitionError> {
        let file: SubCharModelFile = serde_json::from_str(text)?;
        if file.format != SUBCHAR_MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(RecognitionError::InvalidModel(format!(
                "expected {SUBCHAR_MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                file.format, file.version
            )));
        }
        let prototypes = file
            .prototypes
            .into_iter()
            .map(FeatureVector::from_raw)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(file.components, prototypes, file.threshold)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RecognitionError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RecognitionError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Components scoring at least `threshold`, or the single best one when none
/// pass (or when `force_fallback` is set). Ties for best go to the lower id.
pub fn select_components(scores: &[ComponentScore], threshold: f64, force_fallback: bool) -> Vec<ComponentScore> {
    let passing: Vec<ComponentScore> = if force_fallback {
        Vec::new()
    } else {
        scores.iter().copied().filter(|s| s.score >= threshold).collect()
    };
    if !passing.is_empty() {
        return passing;
    }
    let best = scores
        .iter()
        .copied()
        .reduce(|best, s| if s.score > best.score { s } else { best });
    best.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct ComponentFit {
    pub recognizer: SubCharRecognizer,
    /// Vocabulary components with no training instance; they get no prototype.
    pub excluded: Vec<ComponentId>,
    /// `(τ, micro-F1)` for every grid point; empty without validation data.
    pub calibration: Vec<(f64, f64)>,
}

/// A training or validation example: gold component ids plus features.
pub type ComponentExample<'a> = (&'a [ComponentId], &'a FeatureVector);

/// Builds one prototype per component (normalized mean of the features of all
/// images containing it) and, if `validation` is given, picks τ by sweeping
/// [`threshold_grid`] for the best micro-F1 (lowest τ on ties).
pub fn fit_component_recognizer(
    train: &[ComponentExample<'_>],
    vocab: &Vocabulary,
    validation: Option<&[ComponentExample<'_>]>,
) -> Result<ComponentFit, RecognitionError> {
    if train.is_empty() {
        return Err(RecognitionError::EmptyTrainingSet);
    }
    let n_components = vocab.components().len();
    let dim = train[0].1.dim();
    let mut grouped: BTreeMap<ComponentId, Vec<&FeatureVector>> = BTreeMap::new();
    for (ids, features) in train.iter().chain(validation.unwrap_or(&[])) {
        if features.dim() != dim {
            return Err(RecognitionError::DimensionMismatch {
                expected: dim,
                actual: features.dim(),
            });
        }
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= n_components) {
            return Err(RecognitionError::UnknownComponent(bad.to_string()));
        }
    }
    for (ids, features) in train {
        let mut seen = ids.to_vec();
        seen.sort_unstable();
        seen.dedup();
        for id in seen {
            grouped.entry(id).or_default().push(features);
        }
    }

    let excluded: Vec<ComponentId> = (0..n_components as ComponentId)
        .filter(|id| !grouped.contains_key(id))
        .collect();
    let (components, prototypes): (Vec<_>, Vec<_>) = grouped
        .into_iter()
        .map(|(id, members)| (id, FeatureVector::mean(members, dim)))
        .unzip();
    let recognizer = SubCharRecognizer::new(components, prototypes, DEFAULT_COMPONENT_THRESHOLD)?;

    match validation {
        Some(val) if !val.is_empty() => {
            let (best, calibration) = calibrate_component_threshold(&recognizer, val, &threshold_grid());
            Ok(ComponentFit {
                recognizer: recognizer.with_threshold(best)?,
                excluded,
                calibration,
            })
        }
        _ => Ok(ComponentFit {
            recognizer,
            excluded,
            calibration: Vec::new(),
        }),
    }
}

/// Micro-F1 of the recognizer at each τ in `grid`; returns the best τ (lowest
/// on ties) and the full curve.
pub fn calibrate_component_threshold(
    recognizer: &SubCharRecognizer,
    validation: &[ComponentExample<'_>],
    grid: &[f64],
) -> (f64, Vec<(f64, f64)>) {
    let scored: Vec<(Vec<ComponentScore>, bool)> = validation
        .iter()
        .map(|(_, f)| (recognizer.scores(f), f.is_zero()))
        .collect();
    let gold: Vec<Vec<ComponentId>> = validation.iter().map(|(ids, _)| ids.to_vec()).collect();
    let curve: Vec<(f64, f64)> = grid
        .iter()
        .map(|&tau| {
            let predicted: Vec<Vec<ComponentId>> = scored
                .iter()
                .map(|(s, blank)| select_components(s, tau, *blank).iter().map(|c| c.id).collect())
                .collect();
            (tau, evaluate_multilabel(&predicted, &gold).micro.f1)
        })
        .collect();
    let best = curve
        .iter()
        .copied()
        .reduce(|best, p| if p.1 > best.1 { p } else { best })
        .map_or(DEFAULT_COMPONENT_THRESHOLD, |p| p.0);
    (best, curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recognition::FEATURE_DIM;

    fn basis(i: usize) -> FeatureVector {
        let mut v = vec![0.0; FEATURE_DIM];
        v[i] = 1.0;
        FeatureVector::normalized(v)
    }

    fn vocab(n: usize) -> Vocabulary {
        let names: Vec<String> = (0..n).map(|i| format!("k{i}")).collect();
        Vocabulary::from_seed(&names).unwrap()
    }

    #[test]
    fn grid_bounds() {
        let g = threshold_grid();
        assert_eq!(g.len(), 46);
        assert_eq!(g[0], 0.5);
        assert_eq!(g[45], 0.95);
        assert_eq!(g[10], 0.6);
    }

    #[test]
    fn one_component_one_image() {
        let f = basis(7);
        let fit = fit_component_recognizer(&[(&[0][..], &f)], &vocab(1), None).unwrap();
        assert_eq!(fit.recognizer.prototypes()[0], f);
        assert!(fit.excluded.is_empty());
    }

    #[test]
    fn orthogonal_components_match_themselves() {
        let (a, b) = (basis(0), basis(1));
        let train = [(&[0][..], &a), (&[1][..], &b)];
        let fit = fit_component_recognizer(&train, &vocab(3), None).unwrap();
        assert_eq!(fit.excluded, vec![2]);
        let rec = fit.recognizer;
        assert_eq!(rec.recognize(&a), vec![ComponentScore { id: 0, score: 1.0 }]);
        assert_eq!(rec.recognize(&b), vec![ComponentScore { id: 1, score: 1.0 }]);
    }

    #[test]
    fn blank_image_falls_back_to_singleton() {
        let (a, b) = (basis(0), basis(1));
        let rec = fit_component_recognizer(&[(&[0][..], &a), (&[1][..], &b)], &vocab(2), None)
            .unwrap()
            .recognizer
            .with_threshold(0.5)
            .unwrap();
        let out = rec.recognize(&FeatureVector::zeros(FEATURE_DIM));
        assert_eq!(out, vec![ComponentScore { id: 0, score: 0.5 }]);
    }

    #[test]
    fn unknown_component_id_is_error() {
        let f = basis(0);
        let err = fit_component_recognizer(&[(&[4][..], &f)], &vocab(2), None).unwrap_err();
        assert!(matches!(err, RecognitionError::UnknownComponent(_)));
    }

    #[test]
    fn sweep_picks_best_threshold() {
        // Prototypes 0 and 1 are orthogonal unit vectors. A validation image
        // at angle θ from prototype 0 scores (cos θ + 1)/2 against it.
        let (p0, p1) = (basis(0), basis(1));
        let rec = SubCharRecognizer::new(vec![0, 1], vec![p0, p1], 0.5).unwrap();
        let mix = |c0: f64, c1: f64| {
            let mut v = vec![0.0; FEATURE_DIM];
            v[0] = c0;
            v[1] = c1;
            v[2] = (1.0 - c0 * c0 - c1 * c1).max(0.0).sqrt();
            FeatureVector::normalized(v)
        };
        // Gold {0}: mapped scores 0.6 (comp 0) and 0.55 (comp 1).
        let x = mix(0.2, 0.1);
        // Gold {0,1}: mapped 0.62 and 0.61.
        let y = mix(0.24, 0.22);
        let gold0 = [0u32];
        let gold01 = [0u32, 1];
        let val = [(&gold0[..], &x), (&gold01[..], &y)];
        let (best, curve) = calibrate_component_threshold(&rec, &val, &threshold_grid());

        let oracle = |tau: f64| {
            let mut tp = 0.0;
            let mut fp = 0.0;
            let mut fn_ = 0.0;
            for (gold, f) in &val {
                let passing: Vec<u32> = rec.scores(f).into_iter().filter(|s| s.score >= tau).map(|s| s.id).collect();
                let pred = if passing.is_empty() { vec![0] } else { passing };
                tp += pred.iter().filter(|p| gold.contains(p)).count() as f64;
                fp += pred.iter().filter(|p| !gold.contains(p)).count() as f64;
                fn_ += gold.iter().filter(|g| !pred.contains(g)).count() as f64;
            }
            2.0 * tp / (2.0 * tp + fp + fn_)
        };
        let mut expected = (0.0, f64::NEG_INFINITY);
        for tau in threshold_grid() {
            let f1 = oracle(tau);
            if f1 > expected.1 + 1e-12 {
                expected = (tau, f1);
            }
        }
        assert_eq!(best, expected.0);
        assert!((best - 0.56).abs() < 1e-12);
        for (tau, f1) in curve {
            assert!((f1 - oracle(tau)).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_ties_go_low() {
        let rec = SubCharRecognizer::new(vec![0], vec![basis(0)], 0.5).unwrap();
        let f = basis(0);
        let gold = [0u32];
        let (best, _) = calibrate_component_threshold(&rec, &[(&gold[..], &f)], &threshold_grid());
        assert_eq!(best, 0.5);
    }

    #[test]
    fn model_json_round_trip() {
        let rec = SubCharRecognizer::new(vec![1, 4], vec![basis(0), basis(1)], 0.66).unwrap();
        let back = SubCharRecognizer::from_json(&rec.to_json()).unwrap();
        assert_eq!(back, rec);
    }
}
