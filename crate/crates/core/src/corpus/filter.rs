use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Corpus, GlyphLabel};

/// Minimum occurrence count `k` below which a class or component is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_count: usize,
}

impl FilterConfig {
    /// `None` when `min_count` is zero.
    pub fn new(min_count: usize) -> Option<Self> {
        (min_count >= 1).then_some(Self { min_count })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Character,
    Component,
}

/// Drops rare classes (character granularity) or rare components (component
/// granularity). Surviving instances keep their relative order.
///
/// At component granularity a components-kind instance survives when at least
/// one of its components is frequent enough, and its rare components are
/// removed from the items list. Other label kinds pass through untouched.
pub fn filter_by_min_count(corpus: &Corpus, cfg: FilterConfig, granularity: Granularity) -> Corpus {
    let k = cfg.min_count;
    match granularity {
        Granularity::Character => {
            let counts = corpus.class_counts();
            corpus
                .iter()
                .filter(|inst| counts[&inst.label.class_key()] >= k)
                .cloned()
                .collect()
        }
        Granularity::Component => {
            let mut counts: HashMap<&str, usize> = HashMap::new();
            for inst in corpus {
                for item in inst.label.items() {
                    *counts.entry(item.as_str()).or_insert(0) += 1;
                }
            }
            corpus
                .iter()
                .filter_map(|inst| match &inst.label {
                    GlyphLabel::Components { items, char_type } => {
                        let kept: Vec<String> = items
                            .iter()
                            .filter(|item| counts[item.as_str()] >= k)
                            .cloned()
                            .collect();
                        if kept.is_empty() {
                            return None;
                        }
                        let mut out = inst.clone();
                        out.label = GlyphLabel::Components {
                            items: kept,
                            char_type: *char_type,
                        };
                        Some(out)
                    }
                    _ => Some(inst.clone()),
                })
                .collect()
        }
    }
}
