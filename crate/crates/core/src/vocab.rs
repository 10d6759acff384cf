//! Character and sub-character component vocabularies.
//!
//! Component ids are dense and append-only: the seed list occupies
//! `[0, seed_size)` and every component observed in the corpus that is not
//! already present is appended in first-occurrence order.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, GlyphLabel};

pub use crate::corpus::CharacterTypeTag;

pub type CharId = u32;
pub type ComponentId = u32;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("duplicate seed component {0}")]
    DuplicateSeed(String),
    #[error("unknown character {0}")]
    UnknownCharacter(String),
    #[error("unknown component {0}")]
    UnknownComponent(String),
    #[error("invalid vocabulary file: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabFile {
    seed_size: usize,
    characters: Vec<String>,
    components: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    characters: Vec<String>,
    components: Vec<String>,
    seed_size: usize,
    char_index: HashMap<String, CharId>,
    component_index: HashMap<String, ComponentId>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.characters == other.characters
            && self.components == other.components
            && self.seed_size == other.seed_size
    }
}

/// What a label decomposes into under a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decomposition {
    Character(CharId),
    Components(Vec<ComponentId>),
    Unknown,
}

impl Vocabulary {
    /// Vocabulary holding only the seed components.
    pub fn from_seed<S: AsRef<str>>(seed: &[S]) -> Result<Self, VocabError> {
        let mut vocab = Vocabulary::default();
        for s in seed {
            if !vocab.push_component(s.as_ref()) {
                return Err(VocabError::DuplicateSeed(s.as_ref().to_string()));
            }
        }
        vocab.seed_size = vocab.components.len();
        Ok(vocab)
    }

    /// Grows the vocabulary with every symbol in `corpus` not yet present.
    /// Existing ids never change.
    pub fn extend_from_corpus(&mut self, corpus: &Corpus) {
        self.extend_from_labels(corpus.iter().map(|inst| &inst.label));
    }

    /// Same as [`Vocabulary::extend_from_corpus`] over bare labels.
    pub fn extend_from_labels<'a>(&mut self, labels: impl IntoIterator<Item = &'a GlyphLabel>) {
        for label in labels {
            match label {
                GlyphLabel::Modern { text } => {
                    self.push_character(text);
                }
                GlyphLabel::Components { items, .. } => {
                    for item in items {
                        self.push_component(item);
                    }
                }
                GlyphLabel::Unknown => {}
            }
        }
    }

    fn push_character(&mut self, text: &str) -> bool {
        if self.char_index.contains_key(text) {
            return false;
        }
        self.char_index
            .insert(text.to_string(), self.characters.len() as CharId);
        self.characters.push(text.to_string());
        true
    }

    fn push_component(&mut self, item: &str) -> bool {
        if self.component_index.contains_key(item) {
            return false;
        }
        self.component_index
            .insert(item.to_string(), self.components.len() as ComponentId);
        self.components.push(item.to_string());
        true
    }

    pub fn characters(&self) -> &[String] {
        &self.characters
    }

    pub fn components(&self) -> &[String] {
        &self.components
    }

    pub fn seed_size(&self) -> usize {
        self.seed_size
    }

    pub fn char_id(&self, text: &str) -> Option<CharId> {
        self.char_index.get(text).copied()
    }

    pub fn component_id(&self, item: &str) -> Option<ComponentId> {
        self.component_index.get(item).copied()
    }

    pub fn character(&self, id: CharId) -> Option<&str> {
        self.characters.get(id as usize).map(String::as_str)
    }

    pub fn component(&self, id: ComponentId) -> Option<&str> {
        self.components.get(id as usize).map(String::as_str)
    }

    pub fn decompose(&self, label: &GlyphLabel) -> Result<Decomposition, VocabError> {
        match label {
            GlyphLabel::Modern { text } => self
                .char_id(text)
                .map(Decomposition::Character)
                .ok_or_else(|| VocabError::UnknownCharacter(text.clone())),
            GlyphLabel::Components { items, .. } => items
                .iter()
                .map(|item| {
                    self.component_id(item)
                        .ok_or_else(|| VocabError::UnknownComponent(item.clone()))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Decomposition::Components),
            GlyphLabel::Unknown => Ok(Decomposition::Unknown),
        }
    }

    pub fn to_json(&self) -> String {
        let file = VocabFile {
            seed_size: self.seed_size,
            characters: self.characters.clone(),
            components: self.components.clone(),
        };
        serde_json::to_string(&file).expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, VocabError> {
        let file: VocabFile = serde_json::from_str(text)?;
        if file.seed_size > file.components.len() {
            return Err(VocabError::Invalid(format!(
                "seed_size {} exceeds {} components",
                file.seed_size,
                file.components.len()
            )));
        }
        let mut vocab = Vocabulary::default();
        for c in &file.characters {
            if !vocab.push_character(c) {
                return Err(VocabError::Invalid(format!("duplicate character {c}")));
            }
        }
        for c in &file.components {
            if !vocab.push_component(c) {
                return Err(VocabError::Invalid(format!("duplicate component {c}")));
            }
        }
        vocab.seed_size = file.seed_size;
        Ok(vocab)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), VocabError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VocabError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Seed list followed by every observed component; characters in
/// first-occurrence order.
pub fn build_vocabulary<S: AsRef<str>>(corpus: &Corpus, seed: &[S]) -> Result<Vocabulary, VocabError> {
    let mut vocab = Vocabulary::from_seed(seed)?;
    vocab.extend_from_corpus(corpus);
    Ok(vocab)
}

/// Reads a seed list: one component per line, blank lines and `#` comments
/// ignored.
pub fn parse_seed_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OovBreakdown {
    pub instances: usize,
    pub components_kind: usize,
    pub unknown_kind: usize,
    pub oov_rate: f64,
}

impl OovBreakdown {
    fn finish(mut self) -> Self {
        self.oov_rate = if self.instances == 0 {
            0.0
        } else {
            (self.components_kind + self.unknown_kind) as f64 / self.instances as f64
        };
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub overall: OovBreakdown,
    pub per_source: BTreeMap<String, OovBreakdown>,
    /// `(component, instances using it)` in vocabulary id order.
    pub component_usage: Vec<(String, usize)>,
    /// Components in the corpus that the vocabulary lacks.
    pub missing_components: Vec<String>,
}

pub fn coverage_report(corpus: &Corpus, vocab: &Vocabulary) -> CoverageReport {
    let mut overall = OovBreakdown::default();
    let mut per_source: BTreeMap<String, OovBreakdown> = BTreeMap::new();
    let mut usage = vec![0usize; vocab.components().len()];
    let mut missing = Vec::new();

    for inst in corpus {
        let src = per_source.entry(inst.source.clone()).or_default();
        overall.instances += 1;
        src.instances += 1;
        match &inst.label {
            GlyphLabel::Components { items, .. } => {
                overall.components_kind += 1;
                src.components_kind += 1;
                for item in items {
                    match vocab.component_id(item) {
                        Some(id) => usage[id as usize] += 1,
                        None if !missing.contains(item) => missing.push(item.clone()),
                        None => {}
                    }
                }
            }
            GlyphLabel::Unknown => {
                overall.unknown_kind += 1;
                src.unknown_kind += 1;
            }
            GlyphLabel::Modern { .. } => {}
        }
    }

    CoverageReport {
        overall: overall.finish(),
        per_source: per_source.into_iter().map(|(k, v)| (k, v.finish())).collect(),
        component_usage: vocab.components().iter().cloned().zip(usage).collect(),
        missing_components: missing,
    }
}
