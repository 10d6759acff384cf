use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::{cosine, FeatureVector, FEATURE_DIM};
use super::RecognitionError;

pub const DEFAULT_TEMPERATURE: f64 = 0.1;

const CHAR_MODEL_FORMAT: &str = "chutok-char-recognizer";
const MODEL_VERSION: u32 = 1;

/// Full class ranking with confidences that sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction {
    /// `(class key, confidence)`, descending; ties keep class order.
    pub entries: Vec<(String, f64)>,
}

impl RankedPrediction {
    /// Ranks `(class, confidence)` pairs given in class order.
    pub fn from_confidences(pairs: Vec<(String, f64)>) -> Self {
        let mut indexed: Vec<(usize, (String, f64))> = pairs.into_iter().enumerate().collect();
        indexed.sort_by(|a, b| b.1 .1.total_cmp(&a.1 .1).then(a.0.cmp(&b.0)));
        Self {
            entries: indexed.into_iter().map(|(_, e)| e).collect(),
        }
    }

    pub fn top(&self) -> Option<(&str, f64)> {
        self.entries.first().map(|(c, p)| (c.as_str(), *p))
    }

    /// 1-based rank of `class`, if ranked at all.
    pub fn rank_of(&self, class: &str) -> Option<usize> {
        self.entries.iter().position(|(c, _)| c == class).map(|i| i + 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Temperature softmax, shifted by the maximum for stability.
pub fn softmax_confidences(similarities: &[f64], temperature: f64) -> Vec<f64> {
    let max = similarities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = similarities
        .iter()
        .map(|s| ((s - max) / temperature).exp())
        .collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Nearest-centroid character classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct CharRecognizer {
    classes: Vec<String>,
    centroids: Vec<FeatureVector>,
    temperature: f64,
}

#[derive(Serialize, Deserialize)]
struct CharModelFile {
    format: String,
    version: u32,
    temperature: f64,
    classes: Vec<String>,
    centroids: Vec<Vec<f64>>,
}

impl CharRecognizer {
    pub fn new(classes: Vec<String>, centroids: Vec<FeatureVector>, temperature: f64) -> Result<Self, RecognitionError> {
        if classes.len() != centroids.len() {
            return Err(RecognitionError::InvalidModel(format!(
                "{} classes but {} centroids",
                classes.len(),
                centroids.len()
            )));
        }
        let mut seen = HashSet::new();
        for c in &classes {
            if !seen.insert(c.as_str()) {
                return Err(RecognitionError::DuplicateClass(c.clone()));
            }
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(RecognitionError::InvalidModel(format!("temperature {temperature}")));
        }
        Ok(Self {
            classes,
            centroids,
            temperature,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn centroids(&self) -> &[FeatureVector] {
        &self.centroids
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn feature_dim(&self) -> usize {
        self.centroids.first().map_or(FEATURE_DIM, FeatureVector::dim)
    }

    pub fn similarities(&self, features: &FeatureVector) -> Vec<f64> {
        self.centroids.iter().map(|c| cosine(c, features)).collect()
    }

    pub fn recognize(&self, features: &FeatureVector) -> RankedPrediction {
        let conf = softmax_confidences(&self.similarities(features), self.temperature);
        RankedPrediction::from_confidences(self.classes.iter().cloned().zip(conf).collect())
    }

    pub fn to_json(&self) -> String {
        let file = CharModelFile {
            format: CHAR_MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            temperature: self.temperature,
            classes: self.classes.clone(),
            centroids: self.centroids.iter().map(|c| c.as_slice().to_vec()).collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RecognitionError> {
        let file: CharModelFile = serde_json::from_str(text)?;
        if file.format != CHAR_MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(RecognitionError::InvalidModel(format!(
                "expected {CHAR_MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                file.format, file.version
            )));
        }
        let centroids = file
            .centroids
            .into_iter()
            .map(FeatureVector::from_raw)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(file.classes, centroids, file.temperature)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RecognitionError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RecognitionError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Fits one centroid per class: the normalized mean of its training features.
///
/// Classes come from `classes` when given (each must have at least one
/// example), otherwise from the examples themselves in sorted key order.
pub fn fit_char_recognizer<S: AsRef<str>>(
    examples: &[(S, &FeatureVector)],
    classes: Option<&[String]>,
    temperature: f64,
) -> Result<CharRecognizer, RecognitionError> {
    if examples.is_empty() {
        return Err(RecognitionError::EmptyTrainingSet);
    }
    let dim = examples[0].1.dim();
    let mut grouped: BTreeMap<&str, Vec<&FeatureVector>> = BTreeMap::new();
    for (class, features) in examples {
        if features.dim() != dim {
            return Err(RecognitionError::DimensionMismatch {
                expected: dim,
                actual: features.dim(),
            });
        }
        grouped.entry(class.as_ref()).or_default().push(features);
    }

    let class_list: Vec<String> = match classes {
        Some(list) => list.to_vec(),
        None => grouped.keys().map(|k| k.to_string()).collect(),
    };
    let centroids = class_list
        .iter()
        .map(|class| {
            grouped
                .get(class.as_str())
                .map(|members| FeatureVector::mean(members.iter().copied(), dim))
                .ok_or_else(|| RecognitionError::EmptyClass(class.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    CharRecognizer::new(class_list, centroids, temperature)
}
