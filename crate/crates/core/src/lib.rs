//! Zipf-guided data augmentation for named-entity corpora.
//!
//! Word frequencies are fitted to a Zipf law, the fitted curve splits the
//! vocabulary into common and rare words, sentences are partitioned by their
//! share of common words, a generator produces new text from each partition,
//! and rule-based labeling turns that text into BIO-tagged training data.

pub mod augment;
pub mod classify;
pub mod corpus;
pub mod error;
pub mod genbridge;
pub mod labeler;
pub mod zipffit;

pub use augment::{run_pipeline, ImbalanceReport, LabeledDataset, PipelineConfig};
pub use corpus::{Corpus, Document, FrequencyTable, Sentence, SentenceId, Token};
pub use error::{Error, Result};
pub use labeler::{BioLabel, Category, EntitySpan, Granularity};
pub use zipffit::{ClassicalFit, ExtendedFit, FitRecord, SplitPoint};
