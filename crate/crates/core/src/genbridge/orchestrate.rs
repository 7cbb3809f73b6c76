use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::markov::{self, MarkovModel};
use super::remote::{remote_generate, GenerateRequest, JsonClient};
use crate::classify::SentencePartition;
use crate::corpus::{tokenize, Sentence, SentenceId};
use crate::error::{Error, Result};

/// Outputs requested per rare sentence.
pub const EXPANDED_PER_RARE: usize = 2;
/// Outputs requested per common sentence.
pub const INDUCTIVE_PER_COMMON: usize = 1;
/// Token cap for an expanded output.
pub const EXPANDED_MAX_LEN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationKind {
    /// Continuation seeded by a rare sentence.
    Expanded,
    /// Summary-style output seeded by a common sentence.
    Inductive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedSentence {
    pub text: Vec<String>,
    pub kind: GenerationKind,
    pub source_id: SentenceId,
    pub backend_id: String,
    pub seed: u64,
    pub replica: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationFailure {
    pub source_id: SentenceId,
    pub kind: GenerationKind,
    pub error: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationCounts {
    pub n_inductive: usize,
    pub n_expanded: usize,
}

/// Counts the orchestrator will produce when every request succeeds.
pub fn planned_counts(n_common: usize, n_rare: usize) -> GenerationCounts {
    GenerationCounts {
        n_inductive: INDUCTIVE_PER_COMMON * n_common,
        n_expanded: EXPANDED_PER_RARE * n_rare,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationBatch {
    pub outputs: Vec<GeneratedSentence>,
    pub counts: GenerationCounts,
    pub failures: Vec<GenerationFailure>,
}

/// One generation request: a seed sentence and what to make of it.
#[derive(Debug, Clone)]
pub struct GenerationTask<'a> {
    pub kind: GenerationKind,
    pub source: &'a Sentence,
    pub prompt: Vec<String>,
    pub max_len: usize,
    pub num_return: usize,
    pub seed: u64,
}

pub trait Generator: Sync {
    fn backend_id(&self) -> String;

    /// Exactly `task.num_return` token sequences, or an error.
    fn generate(&self, task: &GenerationTask<'_>) -> Result<Vec<Vec<String>>>;

    /// Upper bound on concurrent `generate` calls.
    fn concurrency(&self) -> usize {
        1
    }
}

/// Built-in n-gram backend.
///
/// The continuation of the full prompt usually ends right away (the prompt is
/// a whole sentence), so further sentences are started from pivot words drawn
/// from the seed sentence until the sentence budget or the length cap is hit.
#[derive(Debug, Clone)]
pub struct MarkovGenerator {
    pub model: MarkovModel,
    /// Sentences per expanded output; inductive outputs get one.
    pub expanded_sentences: usize,
}

impl MarkovGenerator {
    pub fn new(model: MarkovModel) -> Self {
        MarkovGenerator {
            model,
            expanded_sentences: 4,
        }
    }

    fn one(&self, task: &GenerationTask<'_>, seed: u64) -> Vec<String> {
        let budget = match task.kind {
            GenerationKind::Expanded => self.expanded_sentences.max(1),
            GenerationKind::Inductive => 1,
        };
        let mut out = markov::generate(&self.model, &task.prompt, task.max_len, seed);
        let mut sentences = usize::from(!out.is_empty());

        let words: Vec<&str> = task
            .source
            .surfaces()
            .filter(|w| w.chars().any(char::is_alphanumeric))
            .collect();
        let pivots: Vec<&str> = if words.is_empty() {
            task.source.surfaces().collect()
        } else {
            words
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while sentences < budget && out.len() < task.max_len && !pivots.is_empty() {
            let pivot = pivots[rng.random_range(0..pivots.len())];
            out.push(pivot.to_string());
            let rest = task.max_len - out.len();
            out.extend(markov::generate(&self.model, &[pivot], rest, rng.random()));
            sentences += 1;
        }
        out.truncate(task.max_len);
        out
    }
}

impl Generator for MarkovGenerator {
    fn backend_id(&self) -> String {
        format!("markov-k{}", self.model.order())
    }

    fn generate(&self, task: &GenerationTask<'_>) -> Result<Vec<Vec<String>>> {
        Ok((0..task.num_return)
            .map(|i| self.one(task, replica_seed(task.seed, i)))
            .collect())
    }

    fn concurrency(&self) -> usize {
        thread::available_parallelism().map_or(1, |n| n.get())
    }
}

#[derive(Debug, Clone)]
pub struct RemoteGenerator {
    pub client: JsonClient,
}

impl Generator for RemoteGenerator {
    fn backend_id(&self) -> String {
        format!("remote:{}", self.client.config().endpoint)
    }

    fn generate(&self, task: &GenerationTask<'_>) -> Result<Vec<Vec<String>>> {
        let request = GenerateRequest {
            prompt: task.prompt.join(" "),
            max_length: task.max_len,
            num_return: task.num_return,
            seed: task.seed,
        };
        let outputs = remote_generate(&self.client, &request)?;
        Ok(outputs
            .iter()
            .map(|text| {
                let mut toks: Vec<String> = tokenize(text).into_iter().map(|t| t.surface).collect();
                toks.truncate(task.max_len);
                toks
            })
            .collect())
    }

    fn concurrency(&self) -> usize {
        self.client.config().concurrency.max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrchestrationConfig {
    pub seed: u64,
    pub expanded_max_len: usize,
    pub inductive_max_len: usize,
    /// Tokens prepended to a common sentence to form the inductive prompt.
    pub inductive_header: String,
    /// Largest tolerated share of failed requests.
    pub failure_threshold: f64,
    /// Caps worker threads; 0 leaves the backend's own limit.
    pub max_workers: usize,
}

impl Default for OrchestrationConfig {
    fn default() -> Self {
        OrchestrationConfig {
            seed: 0,
            expanded_max_len: EXPANDED_MAX_LEN,
            inductive_max_len: 64,
            inductive_header: "Summarize :".into(),
            failure_threshold: 0.10,
            max_workers: 0,
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one source sentence; independent of scheduling order.
pub fn source_seed(base: u64, id: &SentenceId, kind: GenerationKind) -> u64 {
    let mut h = fnv1a(id.doc_id.as_bytes(), FNV_OFFSET);
    h = fnv1a(&(id.sent_id as u64).to_le_bytes(), h);
    h = fnv1a(&[kind as u8], h);
    splitmix64(base ^ h)
}

pub fn replica_seed(source: u64, replica: usize) -> u64 {
    splitmix64(source.wrapping_add(replica as u64))
}

/// Generates one inductive output per common sentence and two expanded
/// outputs per rare sentence. Failed requests are recorded and skipped; the
/// run aborts when the failure share exceeds the configured threshold.
/// Output order: common sources, then rare sources, each in partition order,
/// then replica index.
pub fn orchestrate(
    partition: &SentencePartition,
    backend: &dyn Generator,
    config: &OrchestrationConfig,
) -> Result<GenerationBatch> {
    let header: Vec<String> = tokenize(&config.inductive_header)
        .into_iter()
        .map(|t| t.surface)
        .collect();
    let mut tasks: Vec<GenerationTask<'_>> = Vec::with_capacity(partition.len());
    for s in &partition.common_sentences {
        let mut prompt = header.clone();
        prompt.extend(s.surfaces().map(str::to_string));
        tasks.push(GenerationTask {
            kind: GenerationKind::Inductive,
            source: s,
            prompt,
            max_len: config.inductive_max_len,
            num_return: INDUCTIVE_PER_COMMON,
            seed: source_seed(config.seed, &s.id(), GenerationKind::Inductive),
        });
    }
    for s in &partition.rare_sentences {
        tasks.push(GenerationTask {
            kind: GenerationKind::Expanded,
            source: s,
            prompt: s.surfaces().map(str::to_string).collect(),
            max_len: config.expanded_max_len.min(EXPANDED_MAX_LEN),
            num_return: EXPANDED_PER_RARE,
            seed: source_seed(config.seed, &s.id(), GenerationKind::Expanded),
        });
    }

    let results = run_bounded(&tasks, backend, config.max_workers);
    let backend_id = backend.backend_id();
    let mut batch = GenerationBatch::default();
    for (task, result) in tasks.iter().zip(results) {
        let checked = result.and_then(|outs| {
            if outs.len() == task.num_return {
                Ok(outs)
            } else {
                Err(Error::Consistency(format!(
                    "backend returned {} output(s), expected {}",
                    outs.len(),
                    task.num_return
                )))
            }
        });
        match checked {
            Ok(outs) => {
                for (replica, text) in outs.into_iter().enumerate() {
                    batch.outputs.push(GeneratedSentence {
                        text,
                        kind: task.kind,
                        source_id: task.source.id(),
                        backend_id: backend_id.clone(),
                        seed: replica_seed(task.seed, replica),
                        replica,
                    });
                }
                match task.kind {
                    GenerationKind::Expanded => batch.counts.n_expanded += task.num_return,
                    GenerationKind::Inductive => batch.counts.n_inductive += task.num_return,
                }
            }
            Err(e) => {
                log::warn!("generation for {} failed: {e}", task.source.id());
                batch.failures.push(GenerationFailure {
                    source_id: task.source.id(),
                    kind: task.kind,
                    error: e.to_string(),
                });
            }
        }
    }

    if !tasks.is_empty() {
        let share = batch.failures.len() as f64 / tasks.len() as f64;
        if share > config.failure_threshold {
            return Err(Error::FailureThreshold {
                failed: batch.failures.len(),
                attempted: tasks.len(),
                threshold: config.failure_threshold,
            });
        }
    }
    Ok(batch)
}

fn run_bounded(
    tasks: &[GenerationTask<'_>],
    backend: &dyn Generator,
    max_workers: usize,
) -> Vec<Result<Vec<Vec<String>>>> {
    let mut workers = backend.concurrency();
    if max_workers > 0 {
        workers = workers.min(max_workers);
    }
    let workers = workers.clamp(1, tasks.len().max(1));
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(i) else { break };
                if tx.send((i, backend.generate(task))).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut slots: Vec<Option<Result<Vec<Vec<String>>>>> = (0..tasks.len()).map(|_| None).collect();
    for (i, r) in rx {
        slots[i] = Some(r);
    }
    slots
        .into_iter()
        .map(|s| s.expect("every task reports back"))
        .collect()
}
