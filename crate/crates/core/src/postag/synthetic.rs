//! Generated POS corpora where unseen characters are tag-predictable from
//! their components.
//!
//! Each part of speech owns a few semantic components and a few in-vocabulary
//! characters. An out-of-vocabulary character combines one semantic component
//! of its part of speech with a phonetic component drawn from a pool shared by
//! every part of speech. Most such combinations are rare, so a character-level
//! model sees them as unknown words, while their semantic component still
//! carries the tag.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PosTag, PosType};
use crate::corpus::GlyphLabel;
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosSyntheticParams {
    pub n_sentences: usize,
    /// Probability that a part-of-speech character is out of vocabulary.
    pub oov_probability: f64,
    pub semantic_per_type: usize,
    pub phonetic_pool: usize,
    pub modern_per_type: usize,
    /// Probability that a word spans two characters.
    pub two_char_word_probability: f64,
    pub min_words: usize,
    pub max_words: usize,
    pub seed: u64,
}

impl Default for PosSyntheticParams {
    fn default() -> Self {
        Self {
            n_sentences: 200,
            oov_probability: 0.45,
            semantic_per_type: 3,
            phonetic_pool: 40,
            modern_per_type: 6,
            two_char_word_probability: 0.1,
            min_words: 4,
            max_words: 9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSentence {
    pub labels: Vec<GlyphLabel>,
    pub tags: Vec<PosTag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosSyntheticCorpus {
    pub vocab: Vocabulary,
    pub sentences: Vec<AnnotatedSentence>,
}

impl PosSyntheticCorpus {
    /// Fraction of characters with a components-kind label.
    pub fn oov_rate(&self) -> f64 {
        let (oov, total) = self.sentences.iter().flat_map(|s| &s.labels).fold((0, 0), |(o, t), l| {
            (o + usize::from(l.is_oov()), t + 1)
        });
        if total == 0 {
            0.0
        } else {
            oov as f64 / total as f64
        }
    }
}

const FILLERS: [&str; 3] = ["o0", "o1", "o2"];

pub fn generate_pos_corpus(params: &PosSyntheticParams) -> PosSyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let types = PosType::ALL;

    let semantic: Vec<Vec<String>> = types
        .iter()
        .map(|t| {
            (0..params.semantic_per_type)
                .map(|k| format!("s{}{k}", t.name().to_lowercase()))
                .collect()
        })
        .collect();
    let phonetic: Vec<String> = (0..params.phonetic_pool).map(|k| format!("p{k}")).collect();
    let modern: Vec<Vec<String>> = types
        .iter()
        .map(|t| {
            (0..params.modern_per_type)
                .map(|k| format!("m{}{k}", t.name().to_lowercase()))
                .collect()
        })
        .collect();

    // Successor preferences: each state favours three successors.
    let n_states = types.len() + 1;
    let transitions: Vec<Vec<f64>> = (0..n_states)
        .map(|_| {
            let mut row: Vec<f64> = (0..n_states).map(|_| rng.random_range(0.05..0.3)).collect();
            for _ in 0..3 {
                let k = rng.random_range(0..n_states);
                row[k] += rng.random_range(1.0..3.0);
            }
            row
        })
        .collect();
    let pick = |rng: &mut ChaCha8Rng, weights: &[f64]| -> usize {
        let total: f64 = weights.iter().sum();
        let mut r = rng.random_range(0.0..total);
        for (i, w) in weights.iter().enumerate() {
            if r < *w {
                return i;
            }
            r -= w;
        }
        weights.len() - 1
    };

    let mut sentences = Vec::with_capacity(params.n_sentences);
    for _ in 0..params.n_sentences {
        let n_words = rng.random_range(params.min_words..=params.max_words);
        let mut state = rng.random_range(0..n_states);
        let mut labels = Vec::new();
        let mut tags = Vec::new();
        for _ in 0..n_words {
            if state == types.len() {
                labels.push(GlyphLabel::modern(*FILLERS.choose(&mut rng).expect("fillers")));
                tags.push(PosTag::O);
            } else {
                let len = if rng.random_bool(params.two_char_word_probability) { 2 } else { 1 };
                for k in 0..len {
                    let label = if rng.random_bool(params.oov_probability) {
                        let s = semantic[state].choose(&mut rng).expect("semantic components");
                        let p = phonetic.choose(&mut rng).expect("phonetic pool");
                        GlyphLabel::components([s.as_str(), p.as_str()])
                    } else {
                        GlyphLabel::modern(modern[state].choose(&mut rng).expect("modern characters").as_str())
                    };
                    labels.push(label);
                    tags.push(if k == 0 { PosTag::B(types[state]) } else { PosTag::I(types[state]) });
                }
            }
            state = pick(&mut rng, &transitions[state]);
        }
        sentences.push(AnnotatedSentence { labels, tags });
    }

    let seed: Vec<&String> = semantic.iter().flatten().chain(&phonetic).collect();
    let mut vocab = Vocabulary::from_seed(&seed).expect("component names are distinct");
    vocab.extend_from_labels(sentences.iter().flat_map(|s| &s.labels));
    PosSyntheticCorpus { vocab, sentences }
}
