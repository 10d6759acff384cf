//! Per-class stratified train / validation / test splitting.
//!
//! For a class of `n` instances the test split receives
//! `max(1, round(test_ratio * n))`, validation receives
//! `round(val_ratio * n)` (capped so training keeps at least one), and the
//! remainder goes to training. Instances of a class are sorted by id and
//! shuffled with a seeded Fisher–Yates pass before assignment.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CharacterInstance, Corpus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), SplitError> {
        let positive = self.train > 0.0 && self.val > 0.0 && self.test > 0.0;
        let sum = self.train + self.val + self.test;
        if !positive || (sum - 1.0).abs() > 1e-9 {
            return Err(SplitError::InvalidRatios {
                train: self.train,
                val: self.val,
                test: self.test,
            });
        }
        Ok(())
    }

    /// Sizes `(train, val, test)` for a class of `n >= 2` instances.
    pub fn class_sizes(&self, n: usize) -> (usize, usize, usize) {
        let n_test = ((self.test * n as f64).round() as usize).clamp(1, n - 1);
        let n_val = ((self.val * n as f64).round() as usize).min(n - n_test - 1);
        (n - n_test - n_val, n_val, n_test)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("class {class} has only one instance; filter with k >= 2 before splitting")]
    SingletonClass { class: String },
    #[error("split ratios must be positive and sum to 1 (got {train}/{val}/{test})")]
    InvalidRatios { train: f64, val: f64, test: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub train: Corpus,
    pub val: Corpus,
    pub test: Corpus,
    /// Class key → per-split counts.
    pub report: BTreeMap<String, ClassSplitCounts>,
}

/// Splits a corpus per class. Each output keeps the input's relative order.
pub fn split(corpus: &Corpus, cfg: &SplitConfig) -> Result<CorpusSplit, SplitError> {
    cfg.check()?;

    let mut classes: BTreeMap<String, Vec<&CharacterInstance>> = BTreeMap::new();
    for inst in corpus {
        classes.entry(inst.label.class_key()).or_default().push(inst);
    }

    let mut test_ids = HashSet::new();
    let mut val_ids = HashSet::new();
    let mut report = BTreeMap::new();

    for (class, mut members) in classes {
        if members.len() < 2 {
            return Err(SplitError::SingletonClass { class });
        }
        members.sort_by(|a, b| a.id.cmp(&b.id));
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ fnv1a(class.as_bytes()));
        fisher_yates(&mut members, &mut rng);

        let (n_train, n_val, n_test) = cfg.class_sizes(members.len());
        for inst in &members[..n_test] {
            test_ids.insert(inst.id.as_str());
        }
        for inst in &members[n_test..n_test + n_val] {
            val_ids.insert(inst.id.as_str());
        }
        report.insert(
            class,
            ClassSplitCounts {
                train: n_train,
                val: n_val,
                test: n_test,
            },
        );
    }

    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for inst in corpus {
        let id = inst.id.as_str();
        if test_ids.contains(id) {
            test.push(inst.clone());
        } else if val_ids.contains(id) {
            val.push(inst.clone());
        } else {
            train.push(inst.clone());
        }
    }

    Ok(CorpusSplit {
        train: Corpus::new(train),
        val: Corpus::new(val),
        test: Corpus::new(test),
        report,
    })
}

fn fisher_yates<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

/// 64-bit FNV-1a, used to derive a stable per-class stream from the seed.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}
