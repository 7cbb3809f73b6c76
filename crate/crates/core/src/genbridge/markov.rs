//! Order-k Markov chain over tokens with additive smoothing.
//!
//! Each training sentence is padded with `k` start symbols and one end symbol.
//! Counts are kept for every context length `0..=k`; sampling uses the longest
//! context that was observed in training and backs off otherwise.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Sentence;
use crate::error::{Error, Result};

const START: u32 = 0;
const END: u32 = 1;
const UNKNOWN: u32 = u32::MAX;
const FIRST_WORD: u32 = 2;

#[derive(Debug, Clone, Default)]
struct NextCounts {
    counts: BTreeMap<u32, u64>,
    total: u64,
}

/// Symbol a model can emit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NextToken {
    Word(String),
    End,
}

#[derive(Debug, Clone)]
pub struct MarkovModel {
    order: usize,
    smoothing: f64,
    vocabulary: Vec<String>,
    ids: HashMap<String, u32>,
    // levels[j] maps a length-j context to next-symbol counts
    levels: Vec<HashMap<Vec<u32>, NextCounts>>,
}

pub fn train_markov(sentences: &[Sentence], k: usize, smoothing: f64) -> Result<MarkovModel> {
    if k == 0 {
        return Err(Error::Invalid("markov order must be at least 1".into()));
    }
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::Invalid(format!(
            "smoothing must be >= 0, got {smoothing}"
        )));
    }
    if sentences.iter().all(|s| s.is_empty()) {
        return Err(Error::InsufficientData(
            "markov training set is empty".into(),
        ));
    }

    let mut vocabulary: Vec<String> = sentences
        .iter()
        .flat_map(|s| s.surfaces().map(str::to_string))
        .collect();
    vocabulary.sort();
    vocabulary.dedup();
    let ids: HashMap<String, u32> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), FIRST_WORD + i as u32))
        .collect();

    let mut levels: Vec<HashMap<Vec<u32>, NextCounts>> = vec![HashMap::new(); k + 1];
    for s in sentences.iter().filter(|s| !s.is_empty()) {
        let mut seq = vec![START; k];
        seq.extend(s.surfaces().map(|w| ids[w]));
        seq.push(END);
        for i in k..seq.len() {
            let next = seq[i];
            for (order, level) in levels.iter_mut().enumerate() {
                let entry = level.entry(seq[i - order..i].to_vec()).or_default();
                *entry.counts.entry(next).or_default() += 1;
                entry.total += 1;
            }
        }
    }

    Ok(MarkovModel {
        order: k,
        smoothing,
        vocabulary,
        ids,
        levels,
    })
}

impl MarkovModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    /// Number of emittable symbols: every word plus the end symbol.
    fn support(&self) -> u64 {
        self.vocabulary.len() as u64 + 1
    }

    fn history<S: AsRef<str>>(&self, context: &[S]) -> Vec<u32> {
        let mut h = vec![START; self.order.saturating_sub(context.len())];
        let skip = context.len().saturating_sub(self.order);
        h.extend(
            context[skip..]
                .iter()
                .map(|w| self.ids.get(w.as_ref()).copied().unwrap_or(UNKNOWN)),
        );
        h
    }

    fn counts_for(&self, history: &[u32]) -> &NextCounts {
        for order in (0..=self.order).rev() {
            let ctx = &history[history.len() - order..];
            if let Some(c) = self.levels[order].get(ctx) {
                return c;
            }
        }
        unreachable!("the empty context is always trained")
    }

    fn symbol(&self, id: u32) -> NextToken {
        if id == END {
            NextToken::End
        } else {
            NextToken::Word(self.vocabulary[(id - FIRST_WORD) as usize].clone())
        }
    }

    /// Full smoothed next-symbol distribution after `context` (the last `k`
    /// tokens are used; missing ones are start padding).
    pub fn distribution<S: AsRef<str>>(&self, context: &[S]) -> Vec<(NextToken, f64)> {
        let counts = self.counts_for(&self.history(context));
        let denom = counts.total as f64 + self.smoothing * self.support() as f64;
        let mut out = Vec::with_capacity(self.support() as usize);
        for id in std::iter::once(END).chain(FIRST_WORD..FIRST_WORD + self.vocabulary.len() as u32)
        {
            let c = counts.counts.get(&id).copied().unwrap_or(0) as f64;
            let p = (c + self.smoothing) / denom;
            if p > 0.0 {
                out.push((self.symbol(id), p));
            }
        }
        out
    }

    pub fn probability<S: AsRef<str>>(&self, context: &[S], next: &NextToken) -> f64 {
        self.distribution(context)
            .into_iter()
            .find(|(t, _)| t == next)
            .map(|(_, p)| p)
            .unwrap_or(0.0)
    }

    fn sample(&self, history: &[u32], rng: &mut ChaCha8Rng) -> u32 {
        let counts = self.counts_for(history);
        let smooth_mass = self.smoothing * self.support() as f64;
        let x = rng.random::<f64>() * (counts.total as f64 + smooth_mass);
        if x < counts.total as f64 {
            let mut acc = 0.0;
            for (&id, &c) in &counts.counts {
                acc += c as f64;
                if x < acc {
                    return id;
                }
            }
            return *counts.counts.keys().next_back().expect("non-empty counts");
        }
        // smoothing mass is spread uniformly over END and every word
        let slot = (((x - counts.total as f64) / self.smoothing) as u64).min(self.support() - 1);
        if slot == 0 {
            END
        } else {
            FIRST_WORD + (slot - 1) as u32
        }
    }
}

/// Samples a continuation of `prompt`. Generation stops at the end symbol or
/// after `max_len` tokens; the prompt itself is not part of the output.
pub fn generate<S: AsRef<str>>(
    model: &MarkovModel,
    prompt: &[S],
    max_len: usize,
    seed: u64,
) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = model.history(prompt);
    let mut out = Vec::new();
    while out.len() < max_len {
        let next = model.sample(&history, &mut rng);
        if next == END {
            break;
        }
        out.push(model.vocabulary[(next - FIRST_WORD) as usize].clone());
        history.remove(0);
        history.push(next);
    }
    out
}
