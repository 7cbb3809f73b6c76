//! Common/rare word classes and the sentence discriminant.
//!
//! A sentence with `w_h` tokens, `w_c` of which are common words, scores
//! `τ = w_c / w_h − r0 / r_t` and is common iff `τ > 0`. The comparison is
//! done in integers (`w_c · r_t > r0 · w_h`) so the boundary `τ = 0` is exact.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{FrequencyTable, Sentence};
use crate::error::{Error, Result};
use crate::zipffit::SplitPoint;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordClassMap {
    pub common: HashSet<String>,
    pub rare: HashSet<String>,
    pub r0: usize,
    pub r_t: usize,
}

impl WordClassMap {
    /// Tokens never seen in the source table count as rare.
    pub fn is_common(&self, word: &str) -> bool {
        self.common.contains(word)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentencePartition {
    pub common_sentences: Vec<Sentence>,
    pub rare_sentences: Vec<Sentence>,
}

impl SentencePartition {
    pub fn summary(&self, map: &WordClassMap) -> PartitionSummary {
        PartitionSummary {
            r0: map.r0,
            r_t: map.r_t,
            n_common: self.common_sentences.len(),
            n_rare: self.rare_sentences.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.common_sentences.len() + self.rare_sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub r0: usize,
    pub r_t: usize,
    pub n_common: usize,
    pub n_rare: usize,
}

pub fn classify_words(table: &FrequencyTable, split: SplitPoint) -> Result<WordClassMap> {
    let r_t = table.r_t();
    if split.r0 < 1 || split.r0 > r_t {
        return Err(Error::Domain(format!(
            "r0 = {} outside [1, {r_t}]",
            split.r0
        )));
    }
    let mut common = HashSet::with_capacity(split.r0);
    let mut rare = HashSet::with_capacity(r_t - split.r0);
    for e in table.entries() {
        if e.rank <= split.r0 {
            common.insert(e.item.clone());
        } else {
            rare.insert(e.item.clone());
        }
    }
    Ok(WordClassMap {
        common,
        rare,
        r0: split.r0,
        r_t,
    })
}

fn common_count(sentence: &Sentence, map: &WordClassMap) -> usize {
    sentence.surfaces().filter(|w| map.is_common(w)).count()
}

pub fn tau(sentence: &Sentence, map: &WordClassMap) -> Result<f64> {
    if sentence.is_empty() {
        return Err(Error::Domain(format!(
            "sentence {} has no tokens",
            sentence.id()
        )));
    }
    let w_c = common_count(sentence, map) as f64;
    let w_h = sentence.len() as f64;
    Ok(w_c / w_h - map.r0 as f64 / map.r_t as f64)
}

/// Exact form of `τ > 0`. Empty sentences are never common.
pub fn is_common_sentence(sentence: &Sentence, map: &WordClassMap) -> bool {
    if sentence.is_empty() {
        return false;
    }
    let w_c = common_count(sentence, map) as u128;
    let w_h = sentence.len() as u128;
    w_c * map.r_t as u128 > map.r0 as u128 * w_h
}

/// Splits sentences into common (τ > 0) and rare (τ ≤ 0), keeping input order
/// inside each class.
pub fn partition_sentences(sentences: &[Sentence], map: &WordClassMap) -> SentencePartition {
    let flags: Vec<bool> = sentences
        .par_iter()
        .map(|s| is_common_sentence(s, map))
        .collect();
    let mut part = SentencePartition::default();
    for (s, common) in sentences.iter().zip(flags) {
        if common {
            part.common_sentences.push(s.clone());
        } else {
            part.rare_sentences.push(s.clone());
        }
    }
    part
}
