use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PosError, PosTag};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub tokens: Vec<(String, PosTag)>,
}

impl TaggedSentence {
    pub fn new(tokens: Vec<(String, PosTag)>) -> Self {
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|(s, _)| s.as_str()).collect()
    }

    pub fn tags(&self) -> Vec<PosTag> {
        self.tokens.iter().map(|(_, t)| *t).collect()
    }

    /// Positions holding an `I-X` not preceded by `B-X` or `I-X`.
    pub fn bio_violations(&self) -> Vec<usize> {
        let mut prev = PosTag::O;
        let mut out = Vec::new();
        for (i, &(_, tag)) in self.tokens.iter().enumerate() {
            if let PosTag::I(t) = tag {
                if prev.pos_type() != Some(t) {
                    out.push(i);
                }
            }
            prev = tag;
        }
        out
    }
}

/// BIO-TSV: `surface<TAB>tag` per line, blank lines between sentences.
pub fn read_bio(reader: impl BufRead) -> Result<Vec<TaggedSentence>, PosError> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(TaggedSentence::new(std::mem::take(&mut current)));
            }
            continue;
        }
        let (surface, tag) = line.split_once('\t').ok_or_else(|| PosError::Bio {
            line: line_no,
            message: "expected surface<TAB>tag".into(),
        })?;
        if surface.is_empty() {
            return Err(PosError::Bio {
                line: line_no,
                message: "empty surface".into(),
            });
        }
        let tag = tag.parse::<PosTag>().map_err(|e| PosError::Bio {
            line: line_no,
            message: e.to_string(),
        })?;
        current.push((surface.to_string(), tag));
    }
    if !current.is_empty() {
        sentences.push(TaggedSentence::new(current));
    }
    Ok(sentences)
}

pub fn load_bio(path: impl AsRef<Path>) -> Result<Vec<TaggedSentence>, PosError> {
    read_bio(BufReader::new(File::open(path)?))
}

pub fn write_bio(sentences: &[TaggedSentence], mut out: impl Write) -> Result<(), PosError> {
    for (i, sentence) in sentences.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        for (surface, tag) in &sentence.tokens {
            writeln!(out, "{surface}\t{tag}")?;
        }
    }
    Ok(())
}
