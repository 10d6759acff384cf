//! Multi-granularity tokenization.
//!
//! A slip becomes one token per character: the recognized character when the
//! recognizer is confident enough, otherwise the set of sub-character
//! components it appears to contain. Canonical text form:
//!
//! ```text
//! 初 {心+相} {?}
//! ```
//!
//! Component sets are written in vocabulary id order; `{?}` marks a blank or
//! unrecognizable glyph.

mod calibrate;
mod pipeline;
mod token;

use thiserror::Error;

pub use calibrate::{
    calibrate_threshold, calibrate_token_accuracy, default_theta_grid, token_accuracy, token_correct,
    CalibrationObjective, ThresholdCalibration,
};
pub use pipeline::{
    recognize_crop, recognize_slip, tokenize_annotation, tokenize_slip_image, tokenize_slip_images, CropRecognition,
    SlipRecognition, TokenizerConfig, TokenizerMode,
};
pub use token::{
    parse_tokens, read_token_stream, serialize_tokens, write_token_stream, Token, TokenParseError, TokenSequence,
    UNKNOWN_SURFACE,
};

use crate::recognition::RecognitionError;
use crate::vocab::{ComponentId, VocabError};

#[derive(Debug, Error)]
pub enum TokenizeError {
    #[error("confidence threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("model feature size {actual} does not match the extractor's {expected}")]
    ModelMismatch { expected: usize, actual: usize },
    #[error("character recognizer has no classes")]
    EmptyModel,
    #[error("component id {0} is not in the vocabulary")]
    UnknownComponentId(ComponentId),
    #[error("character key {0:?} cannot be written as a token")]
    InvalidSurface(String),
    #[error("empty component list")]
    EmptyComponents,
    #[error("duplicate component in {0}")]
    DuplicateComponent(String),
    #[error("empty threshold grid")]
    EmptyGrid,
    #[error("empty validation set")]
    EmptyValidation,
    #[error("line {line}: {message}")]
    Stream { line: usize, message: String },
    #[error(transparent)]
    Recognition(#[from] RecognitionError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
