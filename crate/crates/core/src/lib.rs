//! Multi-granularity tokenization of ancient-script slip scans.
//!
//! The pipeline detects characters on a slip image, orders them into reading
//! sequence, and recognizes each one. Confident recognitions become character
//! tokens; the rest fall back to sets of sub-character components. Around that
//! pipeline sit corpus tooling, vocabulary construction, evaluation metrics,
//! and a POS-tagging harness for comparing tokenization granularities.

pub mod corpus;
pub mod detection;
pub mod metrics;
pub mod postag;
pub mod raster;
pub mod recognition;
pub mod reference;
pub mod synth;
pub mod tokenizer;
pub mod vocab;
