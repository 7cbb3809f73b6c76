//! Generator-side plumbing: training-corpus serializations, the built-in
//! Markov backend, the remote wire client and the orchestration that turns a
//! sentence partition into a batch of generated sentences.

pub mod format;
pub mod markov;
pub mod orchestrate;
pub mod remote;

pub use format::{
    parse_articles, parse_titled, serialize_articles, serialize_titled, ArticleCorpus,
    TitledCorpus, TitledPair,
};
pub use markov::{generate, train_markov, MarkovModel, NextToken};
pub use orchestrate::{
    orchestrate, planned_counts, GeneratedSentence, GenerationBatch, GenerationCounts,
    GenerationFailure, GenerationKind, GenerationTask, Generator, MarkovGenerator,
    OrchestrationConfig, RemoteGenerator,
};
pub use remote::{
    remote_generate, GenerateRequest, GenerateResponse, JsonClient, RemoteConfig, RemoteError,
};
