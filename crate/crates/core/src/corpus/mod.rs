//! Annotated character-image corpora.
//!
//! A corpus is a flat list of [`CharacterInstance`] records, each one a single
//! character occurrence cropped from a slip scan. Instances are grouped by the
//! `source / document / slip` hierarchy and ordered within a slip by
//! `reading_index`.
//!
//! Records are exchanged as JSON Lines manifests (see [`manifest`]).

mod filter;
pub mod manifest;
mod split;
mod stats;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::detection::BoundingBox;

pub use filter::{filter_by_min_count, FilterConfig, Granularity};
pub use manifest::{load_manifest, read_manifest, write_manifest, ManifestError};
pub use split::{split, ClassSplitCounts, CorpusSplit, SplitConfig, SplitError};
pub use stats::{stats, CorpusStats, LabelKindCounts, SourceCounts};

/// Class key shared by every unknown-kind instance.
pub const UNKNOWN_CLASS_KEY: &str = "{?}";

/// Separator used when joining component strings into a class key.
pub const COMPONENT_JOINER: char = '+';

/// Traditional three-way classification of a decomposed character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharacterTypeTag {
    Logogram,
    SemanticPhoneticCompound,
    Phonogram,
}

/// Gold annotation of one character image.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "RawLabel", into = "RawLabel")]
pub enum GlyphLabel {
    /// The glyph has a modern equivalent.
    Modern { text: String },
    /// Out-of-vocabulary glyph annotated with its sub-character components.
    Components {
        items: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        char_type: Option<CharacterTypeTag>,
    },
    /// Unrecognizable glyph.
    Unknown,
}

// Wire form; `Unknown {}` lets serde reject stray fields on unknown labels.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawLabel {
    Modern {
        text: String,
    },
    Components {
        items: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        char_type: Option<CharacterTypeTag>,
    },
    Unknown {},
}

impl From<RawLabel> for GlyphLabel {
    fn from(raw: RawLabel) -> Self {
        match raw {
            RawLabel::Modern { text } => GlyphLabel::Modern { text },
            RawLabel::Components { items, char_type } => GlyphLabel::Components { items, char_type },
            RawLabel::Unknown {} => GlyphLabel::Unknown,
        }
    }
}

impl From<GlyphLabel> for RawLabel {
    fn from(label: GlyphLabel) -> Self {
        match label {
            GlyphLabel::Modern { text } => RawLabel::Modern { text },
            GlyphLabel::Components { items, char_type } => RawLabel::Components { items, char_type },
            GlyphLabel::Unknown => RawLabel::Unknown {},
        }
    }
}

impl GlyphLabel {
    pub fn modern(text: impl Into<String>) -> Self {
        GlyphLabel::Modern { text: text.into() }
    }

    pub fn components<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        GlyphLabel::Components {
            items: items.into_iter().map(Into::into).collect(),
            char_type: None,
        }
    }

    pub fn kind(&self) -> LabelKind {
        match self {
            GlyphLabel::Modern { .. } => LabelKind::Modern,
            GlyphLabel::Components { .. } => LabelKind::Components,
            GlyphLabel::Unknown => LabelKind::Unknown,
        }
    }

    /// Identity of the label as a classification target.
    ///
    /// Modern labels key by their text, component labels by the components
    /// joined in annotation order, and all unknown labels share one key.
    pub fn class_key(&self) -> String {
        match self {
            GlyphLabel::Modern { text } => text.clone(),
            GlyphLabel::Components { items, .. } => join_components(items),
            GlyphLabel::Unknown => UNKNOWN_CLASS_KEY.to_string(),
        }
    }

    pub fn items(&self) -> &[String] {
        match self {
            GlyphLabel::Components { items, .. } => items,
            _ => &[],
        }
    }

    pub fn is_oov(&self) -> bool {
        !matches!(self, GlyphLabel::Modern { .. })
    }
}

pub fn join_components<S: AsRef<str>>(items: &[S]) -> String {
    let mut out = String::new();
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push(COMPONENT_JOINER);
        }
        out.push_str(item.as_ref());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Modern,
    Components,
    Unknown,
}

/// One character occurrence on a slip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterInstance {
    pub id: String,
    pub image_path: String,
    pub source: String,
    pub document: String,
    pub slip: String,
    pub reading_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
    pub label: GlyphLabel,
}

impl CharacterInstance {
    /// `source/document/slip`, unique per physical slip.
    pub fn slip_key(&self) -> String {
        format!("{}/{}/{}", self.source, self.document, self.slip)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub instances: Vec<CharacterInstance>,
}

impl Corpus {
    pub fn new(instances: Vec<CharacterInstance>) -> Self {
        Self { instances }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CharacterInstance> {
        self.instances.iter()
    }

    pub fn get(&self, id: &str) -> Option<&CharacterInstance> {
        self.instances.iter().find(|inst| inst.id == id)
    }

    /// Class key → number of instances, ordered by key.
    pub fn class_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for inst in &self.instances {
            *counts.entry(inst.label.class_key()).or_insert(0) += 1;
        }
        counts
    }

    /// Instances grouped by slip, each group sorted by reading index.
    pub fn slips(&self) -> BTreeMap<String, Vec<&CharacterInstance>> {
        let mut slips: BTreeMap<String, Vec<&CharacterInstance>> = BTreeMap::new();
        for inst in &self.instances {
            slips.entry(inst.slip_key()).or_default().push(inst);
        }
        for group in slips.values_mut() {
            group.sort_by_key(|inst| inst.reading_index);
        }
        slips
    }
}

impl FromIterator<CharacterInstance> for Corpus {
    fn from_iter<T: IntoIterator<Item = CharacterInstance>>(iter: T) -> Self {
        Corpus::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a CharacterInstance;
    type IntoIter = std::slice::Iter<'a, CharacterInstance>;

    fn into_iter(self) -> Self::IntoIter {
        self.instances.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    DuplicateId,
    ReadingIndexCollision,
    DegenerateBbox,
    EmptyModernText,
    EmptyComponents,
    DuplicateComponent,
}

impl Rule {
    pub fn describe(&self) -> &'static str {
        match self {
            Rule::DuplicateId => "duplicate id",
            Rule::ReadingIndexCollision => "reading index collision",
            Rule::DegenerateBbox => "bbox degenerate",
            Rule::EmptyModernText => "empty modern text",
            Rule::EmptyComponents => "empty component list",
            Rule::DuplicateComponent => "duplicate component",
        }
    }
}

/// A broken corpus invariant, naming every instance involved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub ids: Vec<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.rule.describe(), self.ids.join(", "))?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

/// Checks every instance invariant. An empty result means the corpus is valid.
pub fn validate(corpus: &Corpus) -> Vec<Violation> {
    let mut violations = Vec::new();

    let mut by_id: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for inst in &corpus.instances {
        by_id.entry(&inst.id).or_default().push(&inst.id);
    }
    for (id, hits) in &by_id {
        if hits.len() > 1 {
            violations.push(Violation {
                rule: Rule::DuplicateId,
                ids: vec![id.to_string(); hits.len()],
                detail: format!("{} occurrences", hits.len()),
            });
        }
    }

    let mut positions: BTreeMap<(String, u32), Vec<String>> = BTreeMap::new();
    for inst in &corpus.instances {
        positions
            .entry((inst.slip_key(), inst.reading_index))
            .or_default()
            .push(inst.id.clone());
    }
    for ((slip, index), ids) in positions {
        if ids.len() > 1 {
            violations.push(Violation {
                rule: Rule::ReadingIndexCollision,
                ids,
                detail: format!("slip {slip} reading_index {index}"),
            });
        }
    }

    for inst in &corpus.instances {
        if let Some(b) = inst.bbox {
            if !(b.w > 0.0 && b.h > 0.0) {
                violations.push(Violation {
                    rule: Rule::DegenerateBbox,
                    ids: vec![inst.id.clone()],
                    detail: format!("w={} h={}", b.w, b.h),
                });
            }
        }
        match &inst.label {
            GlyphLabel::Modern { text } if text.is_empty() => violations.push(Violation {
                rule: Rule::EmptyModernText,
                ids: vec![inst.id.clone()],
                detail: String::new(),
            }),
            GlyphLabel::Components { items, .. } => {
                if items.is_empty() {
                    violations.push(Violation {
                        rule: Rule::EmptyComponents,
                        ids: vec![inst.id.clone()],
                        detail: String::new(),
                    });
                }
                let mut seen = HashMap::new();
                for item in items {
                    if seen.insert(item.as_str(), ()).is_some() {
                        violations.push(Violation {
                            rule: Rule::DuplicateComponent,
                            ids: vec![inst.id.clone()],
                            detail: item.clone(),
                        });
                    }
                }
            }
            _ => {}
        }
    }

    violations
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn instance(id: &str, slip: &str, index: u32, label: GlyphLabel) -> CharacterInstance {
        CharacterInstance {
            id: id.to_string(),
            image_path: format!("img/{id}.png"),
            source: "src".to_string(),
            document: "doc".to_string(),
            slip: slip.to_string(),
            reading_index: index,
            bbox: None,
            label,
        }
    }

    /// `counts` of (class text, n) → modern-labelled instances with unique ids.
    pub fn corpus_with_classes(counts: &[(&str, usize)]) -> Corpus {
        let mut out = Vec::new();
        let mut next = 0u32;
        for (text, n) in counts {
            for _ in 0..*n {
                out.push(instance(
                    &format!("i{next:04}"),
                    "s",
                    next,
                    GlyphLabel::modern(*text),
                ));
                next += 1;
            }
        }
        Corpus::new(out)
    }
}
