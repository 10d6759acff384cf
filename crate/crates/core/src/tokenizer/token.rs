use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use serde::Serialize;

use super::TokenizeError;
use crate::recognition::ComponentScore;
use crate::vocab::{ComponentId, Vocabulary};

pub const UNKNOWN_SURFACE: &str = "{?}";

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Token {
    /// Whole character, with the recognizer's confidence in `(0, 1]`.
    Char { key: String, confidence: f64 },
    /// Non-empty, duplicate-free set of components.
    SubChar { components: Vec<ComponentScore> },
    Unknown,
}

impl Token {
    pub fn char(key: impl Into<String>) -> Self {
        Token::Char {
            key: key.into(),
            confidence: 1.0,
        }
    }

    /// Sub-character token with every score set to 1.
    pub fn sub_char(ids: impl IntoIterator<Item = ComponentId>) -> Self {
        Token::SubChar {
            components: ids.into_iter().map(|id| ComponentScore { id, score: 1.0 }).collect(),
        }
    }

    pub fn is_char(&self) -> bool {
        matches!(self, Token::Char { .. })
    }

    pub fn is_sub_char(&self) -> bool {
        matches!(self, Token::SubChar { .. })
    }

    pub fn component_ids(&self) -> Vec<ComponentId> {
        match self {
            Token::SubChar { components } => components.iter().map(|c| c.id).collect(),
            _ => Vec::new(),
        }
    }

    /// Surface form: the key, `{a+b}` with components in id order, or `{?}`.
    pub fn surface(&self, vocab: &Vocabulary) -> Result<String, TokenizeError> {
        match self {
            Token::Char { key, .. } => {
                if key.is_empty() || key.chars().any(|c| c.is_whitespace() || c == '{' || c == '}') {
                    return Err(TokenizeError::InvalidSurface(key.clone()));
                }
                Ok(key.clone())
            }
            Token::Unknown => Ok(UNKNOWN_SURFACE.to_string()),
            Token::SubChar { components } => {
                let mut ids: Vec<ComponentId> = components.iter().map(|c| c.id).collect();
                ids.sort_unstable();
                let names = ids
                    .iter()
                    .map(|&id| {
                        vocab
                            .component(id)
                            .ok_or(TokenizeError::UnknownComponentId(id))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(format!("{{{}}}", names.join("+")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenSequence {
    pub slip_id: String,
    pub tokens: Vec<Token>,
    /// Reading-order position of each token's source character.
    pub sources: Vec<usize>,
}

impl TokenSequence {
    pub fn new(slip_id: impl Into<String>, tokens: Vec<Token>) -> Self {
        let sources = (0..tokens.len()).collect();
        Self {
            slip_id: slip_id.into(),
            tokens,
            sources,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn sub_char_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_sub_char()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenParseError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for TokenParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at column {}", self.message, self.column)
    }
}

impl std::error::Error for TokenParseError {}

pub fn serialize_tokens(tokens: &[Token], vocab: &Vocabulary) -> Result<String, TokenizeError> {
    let surfaces = tokens
        .iter()
        .map(|t| t.surface(vocab))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(surfaces.join(" "))
}

/// Inverse of [`serialize_tokens`]. Parsed tokens carry confidence and scores
/// of 1; sub-character components come back in id order.
pub fn parse_tokens(text: &str, vocab: &Vocabulary) -> Result<Vec<Token>, TokenParseError> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 1;
    for (column, ch) in (1..).zip(text.chars().chain(std::iter::once(' '))) {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(parse_token(&current, start, vocab)?);
                current.clear();
            }
        } else {
            if current.is_empty() {
                start = column;
            }
            current.push(ch);
        }
    }
    Ok(tokens)
}

fn parse_token(text: &str, column: usize, vocab: &Vocabulary) -> Result<Token, TokenParseError> {
    let err = |offset: usize, message: String| TokenParseError {
        column: column + offset,
        message,
    };
    if text == UNKNOWN_SURFACE {
        return Ok(Token::Unknown);
    }
    let chars: Vec<char> = text.chars().collect();
    if chars[0] != '{' {
        if let Some(i) = chars.iter().position(|&c| c == '{' || c == '}') {
            return Err(err(i, format!("unexpected '{}'", chars[i])));
        }
        return Ok(Token::char(text));
    }
    let close = match chars.iter().skip(1).position(|&c| c == '{' || c == '}') {
        Some(i) if chars[i + 1] == '}' => i + 1,
        Some(i) => return Err(err(i + 1, "unexpected '{'".into())),
        None => return Err(err(0, "unclosed '{'".into())),
    };
    if close != chars.len() - 1 {
        return Err(err(close + 1, "unexpected text after '}'".into()));
    }
    let inner: String = chars[1..close].iter().collect();
    if inner.is_empty() {
        return Err(err(0, "empty component set".into()));
    }
    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    let mut offset = 1;
    for name in inner.split('+') {
        if name.is_empty() {
            return Err(err(offset, "empty component name".into()));
        }
        let id = vocab
            .component_id(name)
            .ok_or_else(|| err(offset, format!("unknown component {name}")))?;
        if !seen.insert(id) {
            return Err(err(offset, format!("duplicate component {name}")));
        }
        ids.push(id);
        offset += name.chars().count() + 1;
    }
    ids.sort_unstable();
    Ok(Token::sub_char(ids))
}

/// Writes `slip_id<TAB>tokens` lines.
pub fn write_token_stream<W: Write>(sequences: &[TokenSequence], vocab: &Vocabulary, mut out: W) -> Result<(), TokenizeError> {
    for seq in sequences {
        writeln!(out, "{}\t{}", seq.slip_id, serialize_tokens(&seq.tokens, vocab)?)?;
    }
    Ok(())
}

pub fn read_token_stream<R: BufRead>(reader: R, vocab: &Vocabulary) -> Result<Vec<TokenSequence>, TokenizeError> {
    let mut sequences = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (slip, rest) = line.split_once('\t').ok_or_else(|| TokenizeError::Stream {
            line: i + 1,
            message: "missing tab after slip id".into(),
        })?;
        let tokens = parse_tokens(rest, vocab).map_err(|e| TokenizeError::Stream {
            line: i + 1,
            message: e.to_string(),
        })?;
        sequences.push(TokenSequence::new(slip, tokens));
    }
    Ok(sequences)
}
