//! Character and sub-character recognition.
//!
//! Both recognizers work on [`FeatureVector`]s: 32×32 Otsu-binarized glyph
//! crops flattened and L2-normalized. The character recognizer is a
//! nearest-centroid classifier whose cosine similarities are turned into a
//! full probability ranking by a temperature softmax; the component
//! recognizer is a multi-label prototype matcher with a calibrated threshold.
//! Scores produced by external models can be ingested through [`external`] and
//! evaluated on the same path.

mod char;
pub mod external;
mod features;
mod metrics;
mod subchar;

use thiserror::Error;

pub use self::char::{fit_char_recognizer, softmax_confidences, CharRecognizer, RankedPrediction, DEFAULT_TEMPERATURE};
pub use features::{cosine, extract_features, FeatureVector, FEATURE_DIM, FEATURE_SIDE};
pub use metrics::{evaluate_multilabel, top_k_accuracy, ComponentMetrics, MultiLabelReport};
pub use subchar::{
    calibrate_component_threshold, fit_component_recognizer, select_components, threshold_grid, ComponentExample,
    ComponentFit, ComponentScore, SubCharRecognizer,
    DEFAULT_COMPONENT_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum RecognitionError {
    #[error("cannot extract features from a zero-sized image")]
    EmptyImage,
    #[error("class {0} has no training instances")]
    EmptyClass(String),
    #[error("no training instances")]
    EmptyTrainingSet,
    #[error("duplicate class {0}")]
    DuplicateClass(String),
    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("unknown component {0}")]
    UnknownComponent(String),
    #[error("invalid model file: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
