use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Corpus, LabelKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCounts {
    pub documents: usize,
    pub slips: usize,
    pub characters: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelKindCounts {
    pub modern: usize,
    pub components: usize,
    pub unknown: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sources: BTreeMap<String, SourceCounts>,
    pub totals: SourceCounts,
    pub label_kinds: LabelKindCounts,
    /// `(class key, count)` sorted by count descending, then key.
    pub class_frequencies: Vec<(String, usize)>,
    /// Fraction of classes seen exactly once (0 for an empty corpus).
    pub singleton_class_fraction: f64,
}

pub fn stats(corpus: &Corpus) -> CorpusStats {
    let mut documents: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut slips: BTreeMap<&str, BTreeSet<(&str, &str)>> = BTreeMap::new();
    let mut sources: BTreeMap<String, SourceCounts> = BTreeMap::new();
    let mut label_kinds = LabelKindCounts::default();

    for inst in corpus {
        documents.entry(&inst.source).or_default().insert(&inst.document);
        slips
            .entry(&inst.source)
            .or_default()
            .insert((&inst.document, &inst.slip));
        sources.entry(inst.source.clone()).or_default().characters += 1;
        match inst.label.kind() {
            LabelKind::Modern => label_kinds.modern += 1,
            LabelKind::Components => label_kinds.components += 1,
            LabelKind::Unknown => label_kinds.unknown += 1,
        }
    }
    for (source, counts) in sources.iter_mut() {
        counts.documents = documents[source.as_str()].len();
        counts.slips = slips[source.as_str()].len();
    }

    let totals = sources.values().fold(SourceCounts::default(), |acc, c| SourceCounts {
        documents: acc.documents + c.documents,
        slips: acc.slips + c.slips,
        characters: acc.characters + c.characters,
    });

    let mut class_frequencies: Vec<(String, usize)> = corpus.class_counts().into_iter().collect();
    class_frequencies.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let singletons = class_frequencies.iter().filter(|(_, n)| *n == 1).count();
    let singleton_class_fraction = if class_frequencies.is_empty() {
        0.0
    } else {
        singletons as f64 / class_frequencies.len() as f64
    };

    CorpusStats {
        sources,
        totals,
        label_kinds,
        class_frequencies,
        singleton_class_fraction,
    }
}
