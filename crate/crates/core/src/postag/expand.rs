use serde::{Deserialize, Serialize};

use super::{PosError, PosTag, TaggedSentence};
use crate::tokenizer::Token;
use crate::vocab::Vocabulary;

pub const BOUNDARY_SURFACE: &str = "{|}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Char,
    Component,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedToken {
    pub surface: String,
    pub tag: PosTag,
    pub role: Role,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedSentence {
    pub tokens: Vec<ExpandedToken>,
}

impl ExpandedSentence {
    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn tags(&self) -> Vec<PosTag> {
        self.tokens.iter().map(|t| t.tag).collect()
    }

    pub fn to_tagged(&self) -> TaggedSentence {
        TaggedSentence::new(self.tokens.iter().map(|t| (t.surface.clone(), t.tag)).collect())
    }

    /// Recovers roles from a flat sequence: boundary markers alternately open
    /// and close a component run.
    pub fn from_tagged(sentence: &TaggedSentence) -> Result<Self, PosError> {
        let mut open = false;
        let mut tokens = Vec::with_capacity(sentence.len());
        for (surface, tag) in &sentence.tokens {
            let role = if surface == BOUNDARY_SURFACE {
                open = !open;
                Role::Boundary
            } else if open {
                Role::Component
            } else {
                Role::Char
            };
            tokens.push(ExpandedToken {
                surface: surface.clone(),
                tag: *tag,
                role,
            });
        }
        if open {
            return Err(PosError::UnclosedBoundary);
        }
        Ok(Self { tokens })
    }
}

/// How a character's tag is copied onto its components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Propagation {
    /// Every component gets the character's exact tag.
    #[default]
    Literal,
    /// `B-X` on the first component, `I-X` on the rest.
    Normalize,
}

/// Replaces each sub-character token by its components between boundary
/// markers; other tokens pass through.
pub fn expand_sentence(
    sentence: &TaggedSentence,
    tokens: &[Token],
    vocab: &Vocabulary,
    propagation: Propagation,
) -> Result<ExpandedSentence, PosError> {
    if sentence.len() != tokens.len() {
        return Err(PosError::LengthMismatch {
            expected: sentence.len(),
            actual: tokens.len(),
        });
    }
    let boundary = || ExpandedToken {
        surface: BOUNDARY_SURFACE.to_string(),
        tag: PosTag::O,
        role: Role::Boundary,
    };
    let mut out = Vec::with_capacity(sentence.len());
    for ((surface, tag), token) in sentence.tokens.iter().zip(tokens) {
        match token {
            Token::SubChar { components } => {
                out.push(boundary());
                for (k, c) in components.iter().enumerate() {
                    let name = vocab.component(c.id).ok_or(PosError::UnknownComponentId(c.id))?;
                    let tag = match (propagation, tag) {
                        (Propagation::Normalize, PosTag::B(t)) if k > 0 => PosTag::I(*t),
                        _ => *tag,
                    };
                    out.push(ExpandedToken {
                        surface: name.to_string(),
                        tag,
                        role: Role::Component,
                    });
                }
                out.push(boundary());
            }
            Token::Char { .. } | Token::Unknown => out.push(ExpandedToken {
                surface: surface.clone(),
                tag: *tag,
                role: Role::Char,
            }),
        }
    }
    Ok(ExpandedSentence { tokens: out })
}

/// Majority tag of a component run; ties go to the tag seen first.
fn vote(run: &[PosTag]) -> PosTag {
    let mut best = run[0];
    let mut best_count = 0;
    for (i, &tag) in run.iter().enumerate() {
        if run[..i].contains(&tag) {
            continue;
        }
        let count = run.iter().filter(|&&t| t == tag).count();
        if count > best_count {
            best = tag;
            best_count = count;
        }
    }
    best
}

/// Back to one tag per character: boundary predictions are dropped and each
/// component run collapses by majority vote.
pub fn collapse_predictions(expanded: &ExpandedSentence, predicted: &[PosTag]) -> Result<Vec<PosTag>, PosError> {
    if expanded.tokens.len() != predicted.len() {
        return Err(PosError::LengthMismatch {
            expected: expanded.tokens.len(),
            actual: predicted.len(),
        });
    }
    let mut out = Vec::new();
    let mut run = Vec::new();
    for (token, &tag) in expanded.tokens.iter().zip(predicted) {
        match token.role {
            Role::Component => run.push(tag),
            Role::Boundary | Role::Char => {
                if !run.is_empty() {
                    out.push(vote(&run));
                    run.clear();
                }
                if token.role == Role::Char {
                    out.push(tag);
                }
            }
        }
    }
    if !run.is_empty() {
        out.push(vote(&run));
    }
    Ok(out)
}
