//! POS-tagging harness for comparing tokenization granularities.
//!
//! Gold data is BIO-tagged at character level. For multi-granularity runs
//! every sub-character token is expanded into its components between `{|}`
//! boundary markers, each component inheriting the character's tag. A tagger
//! runs on the expanded sequence, and its predictions are collapsed back to
//! one tag per character before entity-level scoring, so character-only and
//! multi-granularity runs are scored against identical gold.

mod bio;
mod eval;
mod expand;
mod experiment;
mod hmm;
pub mod synthetic;
mod tags;

use thiserror::Error;

pub use bio::{load_bio, read_bio, write_bio, TaggedSentence};
pub use eval::{evaluate_pos, evaluate_pos_sentences, extract_entities, ClassMetrics, Entity, PosReport};
pub use expand::{
    collapse_predictions, expand_sentence, ExpandedSentence, ExpandedToken, Propagation, Role, BOUNDARY_SURFACE,
};
pub use experiment::{expand_examples, predict_collapsed, run_pos_experiment, surface_label, PosExample};
pub use hmm::HmmTagger;
pub use tags::{PosTag, PosType, UnknownTag, TAG_COUNT};

use crate::tokenizer::TokenizeError;
use crate::vocab::ComponentId;

#[derive(Debug, Error)]
pub enum PosError {
    #[error("line {line}: {message}")]
    Bio { line: usize, message: String },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("sentence {sentence}: expected {expected} tags, got {actual}")]
    SentenceLengthMismatch { sentence: usize, expected: usize, actual: usize },
    #[error("sentence {sentence}: surfaces differ from the gold file")]
    Misaligned { sentence: usize },
    #[error("component id {0} is not in the vocabulary")]
    UnknownComponentId(ComponentId),
    #[error("boundary marker left open")]
    UnclosedBoundary,
    #[error("malformed token surface {0}")]
    BadSurface(String),
    #[error("no tagged tokens to train on")]
    EmptyCorpus,
    #[error("invalid tagger file")]
    InvalidModel,
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
