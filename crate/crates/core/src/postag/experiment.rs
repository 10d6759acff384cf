use rayon::prelude::*;

use super::{
    collapse_predictions, evaluate_pos, expand_sentence, HmmTagger, PosError, PosReport, PosTag, Propagation,
    TaggedSentence,
};
use crate::corpus::GlyphLabel;
use crate::tokenizer::{tokenize_annotation, Token, TokenizerConfig, UNKNOWN_SURFACE};
use crate::vocab::Vocabulary;

/// Reads a surface written in token syntax back into a gold label:
/// `{?}` is unknown, `{a+b}` lists components, anything else is modern text.
pub fn surface_label(surface: &str) -> Result<GlyphLabel, PosError> {
    if surface == UNKNOWN_SURFACE {
        return Ok(GlyphLabel::Unknown);
    }
    match surface.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
        Some(inner) => {
            let items: Vec<&str> = inner.split('+').collect();
            if items.iter().any(|i| i.is_empty()) {
                return Err(PosError::BadSurface(surface.to_string()));
            }
            Ok(GlyphLabel::components(items))
        }
        None => Ok(GlyphLabel::modern(surface)),
    }
}

/// One character-level sentence with the token chosen for each character.
#[derive(Debug, Clone, PartialEq)]
pub struct PosExample {
    pub tokens: Vec<Token>,
    /// Token surfaces with the gold character-level tags.
    pub gold: TaggedSentence,
}

impl PosExample {
    pub fn new(tokens: Vec<Token>, tags: &[PosTag], vocab: &Vocabulary) -> Result<Self, PosError> {
        if tokens.len() != tags.len() {
            return Err(PosError::LengthMismatch {
                expected: tags.len(),
                actual: tokens.len(),
            });
        }
        let surfaces = tokens
            .iter()
            .map(|t| t.surface(vocab))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            tokens,
            gold: TaggedSentence::new(surfaces.into_iter().zip(tags.iter().copied()).collect()),
        })
    }

    /// Tokenizes a gold BIO sentence (surfaces in token syntax) in annotation
    /// mode.
    pub fn from_annotation(sentence: &TaggedSentence, vocab: &Vocabulary, char_only: bool) -> Result<Self, PosError> {
        let labels = sentence
            .tokens
            .iter()
            .map(|(s, _)| surface_label(s))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_labels(&labels, &sentence.tags(), vocab, char_only)
    }

    pub fn from_labels(labels: &[GlyphLabel], tags: &[PosTag], vocab: &Vocabulary, char_only: bool) -> Result<Self, PosError> {
        let cfg = TokenizerConfig {
            char_only,
            ..TokenizerConfig::default()
        };
        let seq = tokenize_annotation("", labels, vocab, &cfg)?;
        Self::new(seq.tokens, tags, vocab)
    }
}

pub fn expand_examples(examples: &[PosExample], vocab: &Vocabulary, propagation: Propagation) -> Result<Vec<TaggedSentence>, PosError> {
    examples
        .iter()
        .map(|ex| Ok(expand_sentence(&ex.gold, &ex.tokens, vocab, propagation)?.to_tagged()))
        .collect()
}

/// Tags the expanded form of each example and collapses back to one tag per
/// character.
pub fn predict_collapsed(
    tagger: &HmmTagger,
    examples: &[PosExample],
    vocab: &Vocabulary,
    propagation: Propagation,
) -> Result<Vec<Vec<PosTag>>, PosError> {
    examples
        .par_iter()
        .map(|ex| {
            let expanded = expand_sentence(&ex.gold, &ex.tokens, vocab, propagation)?;
            let predicted = tagger.tag(&expanded.surfaces());
            collapse_predictions(&expanded, &predicted)
        })
        .collect()
}

/// Train on expanded `train`, evaluate collapsed predictions on `test`.
pub fn run_pos_experiment(
    train: &[PosExample],
    test: &[PosExample],
    vocab: &Vocabulary,
    propagation: Propagation,
) -> Result<PosReport, PosError> {
    let tagger = HmmTagger::train(&expand_examples(train, vocab, propagation)?)?;
    let predicted = predict_collapsed(&tagger, test, vocab, propagation)?;
    let gold: Vec<Vec<PosTag>> = test.iter().map(|ex| ex.gold.tags()).collect();
    evaluate_pos(&predicted, &gold)
}
