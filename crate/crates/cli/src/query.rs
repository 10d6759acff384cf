//! In-memory character index behind the `/characters` endpoints.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use chutok::corpus::{stats, CharacterInstance, Corpus, CorpusStats, GlyphLabel, LabelKind};
use serde::{Deserialize, Serialize};

pub const MAX_LIMIT: usize = 500;
pub const DEFAULT_LIMIT: usize = 50;

fn default_limit() -> usize {
    DEFAULT_LIMIT
}

/// Search over annotations. Every supplied field must match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryFilter {
    /// Class key: modern text, `a+b` for components, `{?}` for unknown.
    pub label: Option<String>,
    /// Component name; matches components-kind labels that list it.
    pub component: Option<String>,
    pub source: Option<String>,
    pub document: Option<String>,
    #[serde(default)]
    pub offset: usize,
    #[serde(default = "default_limit")]
    pub limit: usize,
}

impl Default for QueryFilter {
    fn default() -> Self {
        Self {
            label: None,
            component: None,
            source: None,
            document: None,
            offset: 0,
            limit: DEFAULT_LIMIT,
        }
    }
}

impl QueryFilter {
    pub fn validate(&self) -> Result<(), String> {
        if (1..=MAX_LIMIT).contains(&self.limit) {
            Ok(())
        } else {
            Err(format!("limit must be between 1 and {MAX_LIMIT}, got {}", self.limit))
        }
    }

    pub fn matches(&self, inst: &CharacterInstance) -> bool {
        let eq = |want: &Option<String>, have: &str| want.as_deref().is_none_or(|w| w == have);
        eq(&self.source, &inst.source)
            && eq(&self.document, &inst.document)
            && self.label.as_deref().is_none_or(|l| inst.label.class_key() == l)
            && self
                .component
                .as_deref()
                .is_none_or(|c| matches!(&inst.label, GlyphLabel::Components { items, .. } if items.iter().any(|i| i == c)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacterSummary {
    pub id: String,
    pub kind: LabelKind,
    pub label: String,
    pub source: String,
    pub document: String,
    pub slip: String,
    pub reading_index: u32,
}

impl From<&CharacterInstance> for CharacterSummary {
    fn from(inst: &CharacterInstance) -> Self {
        Self {
            id: inst.id.clone(),
            kind: inst.label.kind(),
            label: inst.label.class_key(),
            source: inst.source.clone(),
            document: inst.document.clone(),
            slip: inst.slip.clone(),
            reading_index: inst.reading_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Page {
    /// Matches before pagination.
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub items: Vec<CharacterSummary>,
}

/// Instances sorted by id, with images resolved against a root directory.
#[derive(Debug, Clone)]
pub struct CharacterIndex {
    instances: Vec<CharacterInstance>,
    positions: HashMap<String, usize>,
    image_root: PathBuf,
    stats: CorpusStats,
}

impl CharacterIndex {
    pub fn new(corpus: &Corpus, image_root: impl Into<PathBuf>) -> Self {
        let mut instances = corpus.instances.clone();
        instances.sort_by(|a, b| a.id.cmp(&b.id));
        let positions = instances
            .iter()
            .enumerate()
            .map(|(i, inst)| (inst.id.clone(), i))
            .collect();
        Self {
            instances,
            positions,
            image_root: image_root.into(),
            stats: stats(corpus),
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn get(&self, id: &str) -> Option<&CharacterInstance> {
        self.positions.get(id).map(|&i| &self.instances[i])
    }

    pub fn image_path(&self, inst: &CharacterInstance) -> PathBuf {
        resolve_image(&self.image_root, &inst.image_path)
    }

    /// Matching instances in id order, paginated. Callers validate the limit;
    /// an invalid one is clamped here.
    pub fn query(&self, filter: &QueryFilter) -> Page {
        let limit = filter.limit.clamp(1, MAX_LIMIT);
        let matching: Vec<&CharacterInstance> = self.instances.iter().filter(|i| filter.matches(i)).collect();
        Page {
            total: matching.len(),
            offset: filter.offset,
            limit,
            items: matching
                .into_iter()
                .skip(filter.offset)
                .take(limit)
                .map(CharacterSummary::from)
                .collect(),
        }
    }
}

pub fn resolve_image(root: &Path, image_path: &str) -> PathBuf {
    root.join(image_path)
}
