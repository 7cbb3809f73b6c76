//! End-to-end run: fit → split point → word classes → sentence partition →
//! generation → labeling → verification → merge, with every intermediate
//! artifact written to the run directory as it is produced.

use std::collections::BTreeMap;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{merge, CategoryCounts, LabeledDataset, LabeledSentence, Provenance};
use super::report::{imbalance_report, ImbalanceReport, EXCLUSION_MAX};
use crate::classify::{classify_words, partition_sentences, PartitionSummary};
use crate::corpus::{to_plain_lines, Corpus, FrequencyTable, Sentence};
use crate::error::{Error, Result};
use crate::genbridge::{
    orchestrate, train_markov, GenerationBatch, Generator, JsonClient, MarkovGenerator,
    OrchestrationConfig, RemoteConfig, RemoteGenerator,
};
use crate::labeler::{
    apply_rules, emit_bio, verify_triggers, AlgorithmConfig, Annotations, CompiledRule,
    Granularity, PosTagger, TriggerLexicon,
};
use crate::zipffit::{
    default_beta_grid, find_r0_classical, find_r0_extended, fit_classical, fit_extended, FitRecord,
    SplitPoint,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    #[default]
    Classical,
    Extended,
}

impl FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Law::Classical),
            "extended" => Ok(Law::Extended),
            other => Err(Error::Invalid(format!("unknown law {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Markov,
    Remote,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markov" => Ok(Backend::Markov),
            "remote" => Ok(Backend::Remote),
            other => Err(Error::Invalid(format!(
                "unknown generator backend {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub backend: Backend,
    pub markov_order: usize,
    pub smoothing: f64,
    /// Sentences per expanded Markov output.
    pub expanded_sentences: usize,
    pub remote: RemoteConfig,
    pub orchestration: OrchestrationConfig,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            backend: Backend::Markov,
            markov_order: 2,
            smoothing: 0.01,
            expanded_sentences: 4,
            remote: RemoteConfig::default(),
            orchestration: OrchestrationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub law: Law,
    /// Inclusive β search range for the extended law.
    pub beta_grid: Option<(i64, i64)>,
    /// Fixed split point; skips the law-specific estimate.
    pub r0: Option<usize>,
    pub generator: GeneratorConfig,
    pub algorithm: AlgorithmConfig,
    /// Tag for tokens missing from the POS lexicon.
    pub default_pos: String,
    pub granularity: Granularity,
    /// Keep generated sentences without any verified span.
    pub keep_unlabeled: bool,
    pub exclusion_max: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            law: Law::Classical,
            beta_grid: None,
            r0: None,
            generator: GeneratorConfig::default(),
            algorithm: AlgorithmConfig::default(),
            default_pos: "x".into(),
            granularity: Granularity::Word,
            keep_unlabeled: false,
            exclusion_max: EXCLUSION_MAX,
        }
    }
}

/// Fits `law` to `table` and derives its split point.
/// Fits `law` to `table`. The extended record has no `r0` when the fit has
/// no turning point.
pub fn fit_record(
    table: &FrequencyTable,
    law: Law,
    beta_grid: Option<RangeInclusive<i64>>,
) -> Result<FitRecord> {
    let r_t = table.r_t();
    match law {
        Law::Classical => {
            let fit = fit_classical(table)?;
            let split = find_r0_classical(&fit, r_t)?;
            Ok(FitRecord::classical(&fit, Some(split), r_t))
        }
        Law::Extended => {
            let fit = fit_extended(table, beta_grid.unwrap_or_else(|| default_beta_grid(r_t)))?;
            Ok(FitRecord::extended(&fit, find_r0_extended(&fit).ok(), r_t))
        }
    }
}

fn require_split(record: &FitRecord) -> Result<SplitPoint> {
    record
        .split_point()
        .ok_or(Error::NoTurningPoint(record.beta.unwrap_or(0.0)))
}

/// [`fit_record`] plus its split point, which must exist.
pub fn fit_law(
    table: &FrequencyTable,
    law: Law,
    beta_grid: Option<RangeInclusive<i64>>,
) -> Result<(FitRecord, SplitPoint)> {
    let record = fit_record(table, law, beta_grid)?;
    let split = require_split(&record)?;
    Ok((record, split))
}

/// [`fit_law`] with the configured grid; a manual `r0` replaces the fitted
/// split and stands in when the fit has none.
pub fn fit_stage(
    table: &FrequencyTable,
    config: &PipelineConfig,
) -> Result<(FitRecord, SplitPoint)> {
    let grid = config.beta_grid.map(|(lo, hi)| lo..=hi);
    let mut record = fit_record(table, config.law, grid)?;
    if let Some(r0) = config.r0 {
        record.r0 = Some(r0);
        return Ok((record, SplitPoint::manual(r0)));
    }
    let split = require_split(&record)?;
    Ok((record, split))
}

pub fn build_generator(
    config: &GeneratorConfig,
    training: &[Sentence],
) -> Result<Box<dyn Generator>> {
    match config.backend {
        Backend::Markov => {
            let model = train_markov(training, config.markov_order, config.smoothing)?;
            Ok(Box::new(MarkovGenerator {
                model,
                expanded_sentences: config.expanded_sentences,
            }))
        }
        Backend::Remote => {
            if config.remote.endpoint.is_empty() {
                return Err(Error::Invalid("remote backend needs an endpoint".into()));
            }
            Ok(Box::new(RemoteGenerator {
                client: JsonClient::new(config.remote.clone()),
            }))
        }
    }
}

/// Rule-labeling resources.
pub struct LabelingInputs<'a> {
    pub tagger: &'a dyn PosTagger,
    pub rules: &'a [CompiledRule],
    pub triggers: &'a TriggerLexicon,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelStats {
    pub sentences: usize,
    pub proposed_spans: usize,
    pub verified_spans: usize,
    pub kept_sentences: usize,
}

/// Tags, rule-labels and verifies each sentence. Sentences without a
/// verified span are dropped unless `keep_unlabeled`; empty sentences are
/// always dropped.
pub fn label_sentences(
    sentences: &[Sentence],
    inputs: &LabelingInputs<'_>,
    granularity: Granularity,
    keep_unlabeled: bool,
) -> Result<(LabeledDataset, LabelStats)> {
    let labeled: Vec<(usize, usize, Option<LabeledSentence>)> = sentences
        .par_iter()
        .map(|sentence| {
            let tagged = inputs.tagger.tag(sentence)?;
            let proposed = apply_rules(inputs.rules, &tagged, &Annotations::default());
            let n_proposed = proposed.len();
            let verified: Vec<_> = proposed
                .into_iter()
                .filter(|s| verify_triggers(s, inputs.triggers))
                .collect();
            let n_verified = verified.len();
            if sentence.is_empty() || (verified.is_empty() && !keep_unlabeled) {
                return Ok((n_proposed, n_verified, None));
            }
            let records = emit_bio(sentence, &verified, granularity)?;
            let (tokens, labels) = records.into_iter().map(|r| (r.surface, r.label)).unzip();
            let ls = LabeledSentence::new(sentence.id(), tokens, labels, Provenance::Generated)?;
            Ok((n_proposed, n_verified, Some(ls)))
        })
        .collect::<Result<_>>()?;

    let mut stats = LabelStats {
        sentences: sentences.len(),
        ..LabelStats::default()
    };
    let mut kept = Vec::new();
    for (p, v, s) in labeled {
        stats.proposed_spans += p;
        stats.verified_spans += v;
        kept.extend(s);
    }
    stats.kept_sentences = kept.len();
    Ok((LabeledDataset::new(granularity, kept), stats))
}

/// Generated outputs as sentences of document `generated`, in batch order.
pub fn generated_sentences(batch: &GenerationBatch) -> Vec<Sentence> {
    batch
        .outputs
        .iter()
        .enumerate()
        .map(|(i, g)| Sentence::new("generated", i, g.text.iter().cloned()))
        .collect()
}

/// [`label_sentences`] over a generation batch, linking each result to the
/// sentence that seeded it.
pub fn label_generated(
    batch: &GenerationBatch,
    inputs: &LabelingInputs<'_>,
    granularity: Granularity,
    keep_unlabeled: bool,
) -> Result<(LabeledDataset, LabelStats)> {
    let (ds, stats) = label_sentences(
        &generated_sentences(batch),
        inputs,
        granularity,
        keep_unlabeled,
    )?;
    let linked = ds
        .sentences()
        .iter()
        .cloned()
        .map(|mut s| {
            s.source = Some(batch.outputs[s.id.sent_id].source_id.clone());
            s
        })
        .collect();
    Ok((LabeledDataset::new(granularity, linked), stats))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunCounts {
    pub raw_sentences: usize,
    pub n_common: usize,
    pub n_rare: usize,
    pub n_inductive: usize,
    pub n_expanded: usize,
    pub generation_failures: usize,
    pub labeling: LabelStats,
    pub added_sentences: usize,
    pub categories_before: CategoryCounts,
    pub categories_after: CategoryCounts,
}

/// Run record. Everything except `timings_ms` is reproducible per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: PipelineConfig,
    pub seed: u64,
    pub fit: Option<FitRecord>,
    pub r0: Option<usize>,
    pub r_t: usize,
    pub partition: Option<PartitionSummary>,
    pub counts: RunCounts,
    pub artifacts: Vec<String>,
    pub timings_ms: BTreeMap<String, u64>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub augmented: LabeledDataset,
    pub before: ImbalanceReport,
    pub after: ImbalanceReport,
    pub generated: GenerationBatch,
    pub manifest: RunManifest,
}

struct Artifacts<'p> {
    dir: Option<&'p Path>,
    written: Vec<String>,
}

impl Artifacts<'_> {
    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        if let Some(dir) = self.dir {
            let path: PathBuf = dir.join(name);
            fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        }
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }
}

fn timed<T>(
    timings: &mut BTreeMap<String, u64>,
    stage: &'static str,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let t = Instant::now();
    let r = f().map_err(|e| e.in_stage(stage));
    timings.insert(stage.to_string(), t.elapsed().as_millis() as u64);
    r
}

/// Runs every stage. With `out_dir`, artifacts and `manifest.json` are
/// written there; a failed run still leaves its manifest and earlier
/// artifacts behind.
pub fn run_pipeline(
    corpus: &Corpus,
    inputs: &LabelingInputs<'_>,
    config: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Result<PipelineOutput> {
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut art = Artifacts {
        dir: out_dir,
        written: Vec::new(),
    };
    let mut manifest = RunManifest {
        status: "running".into(),
        error: None,
        config: config.clone(),
        seed: config.generator.orchestration.seed,
        fit: None,
        r0: None,
        r_t: 0,
        partition: None,
        counts: RunCounts::default(),
        artifacts: Vec::new(),
        timings_ms: BTreeMap::new(),
    };
    let result = run_stages(corpus, inputs, config, &mut art, &mut manifest);
    manifest.artifacts = art.written.clone();
    match &result {
        Ok(_) => manifest.status = "ok".into(),
        Err(e) => {
            manifest.status = "failed".into();
            manifest.error = Some(e.to_string());
        }
    }
    art.json("manifest.json", &manifest)?;
    let (augmented, before, after, generated) = result?;
    Ok(PipelineOutput {
        augmented,
        before,
        after,
        generated,
        manifest,
    })
}

type StageOutput = (
    LabeledDataset,
    ImbalanceReport,
    ImbalanceReport,
    GenerationBatch,
);

fn run_stages(
    corpus: &Corpus,
    inputs: &LabelingInputs<'_>,
    config: &PipelineConfig,
    art: &mut Artifacts<'_>,
    manifest: &mut RunManifest,
) -> Result<StageOutput> {
    let mut timings = std::mem::take(&mut manifest.timings_ms);
    let out = (|| {
        let raw = timed(&mut timings, "ingest", || {
            LabeledDataset::from_corpus(corpus, config.granularity)
        })?;
        manifest.counts.raw_sentences = raw.len();
        manifest.counts.categories_before = raw.category_counts();

        let table = corpus.word_table();
        manifest.r_t = table.r_t();
        let split = timed(&mut timings, "fit", || {
            art.write("word_table.csv", table.to_csv())?;
            let (record, split) = fit_stage(&table, config)?;
            art.json("fit.json", &record)?;
            manifest.fit = Some(record);
            Ok(split)
        })?;
        manifest.r0 = Some(split.r0);

        let sentences: Vec<Sentence> = corpus.sentences().cloned().collect();
        let partition = timed(&mut timings, "classify", || {
            let map = classify_words(&table, split)?;
            let part = partition_sentences(&sentences, &map);
            let summary = part.summary(&map);
            art.json("partition.json", &summary)?;
            art.write("common.txt", to_plain_lines(&part.common_sentences))?;
            art.write("rare.txt", to_plain_lines(&part.rare_sentences))?;
            manifest.partition = Some(summary);
            Ok(part)
        })?;
        manifest.counts.n_common = partition.common_sentences.len();
        manifest.counts.n_rare = partition.rare_sentences.len();

        let batch = timed(&mut timings, "generate", || {
            let backend = build_generator(&config.generator, &sentences)?;
            let batch = orchestrate(
                &partition,
                backend.as_ref(),
                &config.generator.orchestration,
            )?;
            let mut lines = String::new();
            for g in &batch.outputs {
                lines.push_str(&serde_json::to_string(g)?);
                lines.push('\n');
            }
            art.write("generated.jsonl", lines)?;
            Ok(batch)
        })?;
        manifest.counts.n_inductive = batch.counts.n_inductive;
        manifest.counts.n_expanded = batch.counts.n_expanded;
        manifest.counts.generation_failures = batch.failures.len();

        let generated = timed(&mut timings, "label", || {
            let (ds, stats) =
                label_generated(&batch, inputs, config.granularity, config.keep_unlabeled)?;
            art.write("generated_labeled.conll", ds.to_conll())?;
            manifest.counts.labeling = stats;
            Ok(ds)
        })?;

        let augmented = timed(&mut timings, "merge", || {
            let m = merge(&raw, &generated)?;
            art.write("augmented.conll", m.to_conll())?;
            Ok(m)
        })?;
        manifest.counts.added_sentences = augmented.len() - raw.len();
        manifest.counts.categories_after = augmented.category_counts();

        let (before, after) = timed(&mut timings, "report", || {
            let before = imbalance_report(&raw);
            let after = imbalance_report(&augmented);
            art.json("report_before.json", &before)?;
            art.json("report_after.json", &after)?;
            art.write("exclusion_before.csv", before.exclusion.to_csv())?;
            art.write("exclusion_after.csv", after.exclusion.to_csv())?;
            Ok((before, after))
        })?;
        Ok((augmented, before, after, batch))
    })();
    manifest.timings_ms = timings;
    out
}
