use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tags::TAG_COUNT;
use super::{PosError, PosTag, TaggedSentence};

const TAGGER_FORMAT: &str = "chutok-hmm-tagger";
const TAGGER_VERSION: u32 = 1;

/// First-order HMM tagger over surface strings.
///
/// Start and transition probabilities are add-one smoothed over the 21 tags.
/// A known word's emission is `(c(t, w) + 1) / (c(t) + |V|)`. Unseen words
/// get the same emission under every tag, so only transitions decide them.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmTagger {
    counts: HmmCounts,
    log_start: Vec<f64>,
    log_trans: Vec<Vec<f64>>,
    log_emit: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HmmCounts {
    start: Vec<u64>,
    transitions: Vec<Vec<u64>>,
    /// Per word, one count per tag.
    emissions: BTreeMap<String, Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
struct TaggerFile {
    format: String,
    version: u32,
    tags: Vec<String>,
    #[serde(flatten)]
    counts: HmmCounts,
}

impl HmmTagger {
    pub fn train(corpus: &[TaggedSentence]) -> Result<Self, PosError> {
        let n = TAG_COUNT;
        let mut counts = HmmCounts {
            start: vec![0; n],
            transitions: vec![vec![0; n]; n],
            emissions: BTreeMap::new(),
        };
        for sentence in corpus.iter().filter(|s| !s.is_empty()) {
            counts.start[sentence.tokens[0].1.index()] += 1;
            for pair in sentence.tokens.windows(2) {
                counts.transitions[pair[0].1.index()][pair[1].1.index()] += 1;
            }
            for (word, tag) in &sentence.tokens {
                counts.emissions.entry(word.clone()).or_insert_with(|| vec![0; n])[tag.index()] += 1;
            }
        }
        if counts.emissions.is_empty() {
            return Err(PosError::EmptyCorpus);
        }
        Ok(Self::from_counts(counts))
    }

    fn from_counts(counts: HmmCounts) -> Self {
        let n = TAG_COUNT;
        let smoothed = |row: &[u64]| -> Vec<f64> {
            let total: u64 = row.iter().sum();
            row.iter()
                .map(|&c| ((c + 1) as f64 / (total + n as u64) as f64).ln())
                .collect()
        };
        let log_start = smoothed(&counts.start);
        let log_trans = counts.transitions.iter().map(|row| smoothed(row)).collect();

        let vocab_size = counts.emissions.len() as f64;
        let mut tag_totals = vec![0u64; n];
        for row in counts.emissions.values() {
            for (t, &c) in row.iter().enumerate() {
                tag_totals[t] += c;
            }
        }
        let log_emit = counts
            .emissions
            .iter()
            .map(|(w, row)| {
                let logs = row
                    .iter()
                    .zip(&tag_totals)
                    .map(|(&c, &total)| ((c + 1) as f64 / (total as f64 + vocab_size)).ln())
                    .collect();
                (w.clone(), logs)
            })
            .collect();
        Self {
            counts,
            log_start,
            log_trans,
            log_emit,
        }
    }

    pub fn vocabulary_size(&self) -> usize {
        self.log_emit.len()
    }

    pub fn knows(&self, word: &str) -> bool {
        self.log_emit.contains_key(word)
    }

    fn emission(&self, word: &str, tag: usize) -> f64 {
        self.log_emit.get(word).map_or(0.0, |row| row[tag])
    }

    /// Viterbi decoding; equal scores resolve to the earlier tag.
    pub fn tag<S: AsRef<str>>(&self, words: &[S]) -> Vec<PosTag> {
        let n = TAG_COUNT;
        let Some(first) = words.first() else {
            return Vec::new();
        };
        let mut score: Vec<f64> = (0..n)
            .map(|t| self.log_start[t] + self.emission(first.as_ref(), t))
            .collect();
        let mut back: Vec<Vec<usize>> = Vec::with_capacity(words.len());
        for word in &words[1..] {
            let mut next = vec![f64::NEG_INFINITY; n];
            let mut ptr = vec![0; n];
            for (t, slot) in next.iter_mut().enumerate() {
                let mut best = (f64::NEG_INFINITY, 0);
                for (p, &s) in score.iter().enumerate() {
                    let v = s + self.log_trans[p][t];
                    if v > best.0 {
                        best = (v, p);
                    }
                }
                *slot = best.0 + self.emission(word.as_ref(), t);
                ptr[t] = best.1;
            }
            back.push(ptr);
            score = next;
        }
        let mut best = 0;
        for t in 1..n {
            if score[t] > score[best] {
                best = t;
            }
        }
        let mut path = vec![best];
        for ptr in back.iter().rev() {
            best = ptr[best];
            path.push(best);
        }
        path.reverse();
        path.into_iter()
            .map(|i| PosTag::from_index(i).expect("tag index in range"))
            .collect()
    }

    pub fn tag_all<S: AsRef<str> + Sync>(&self, sentences: &[Vec<S>]) -> Vec<Vec<PosTag>> {
        sentences.par_iter().map(|s| self.tag(s)).collect()
    }

    pub fn to_json(&self) -> String {
        let file = TaggerFile {
            format: TAGGER_FORMAT.to_string(),
            version: TAGGER_VERSION,
            tags: PosTag::all().iter().map(ToString::to_string).collect(),
            counts: self.counts.clone(),
        };
        serde_json::to_string(&file).expect("tagger serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PosError> {
        let file: TaggerFile = serde_json::from_str(text)?;
        let expected_tags: Vec<String> = PosTag::all().iter().map(ToString::to_string).collect();
        let n = TAG_COUNT;
        let counts = file.counts;
        let ok = file.format == TAGGER_FORMAT
            && file.version == TAGGER_VERSION
            && file.tags == expected_tags
            && counts.start.len() == n
            && counts.transitions.len() == n
            && counts.transitions.iter().all(|r| r.len() == n)
            && counts.emissions.values().all(|r| r.len() == n)
            && !counts.emissions.is_empty();
        if !ok {
            return Err(PosError::InvalidModel);
        }
        Ok(Self::from_counts(counts))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PosError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PosError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
