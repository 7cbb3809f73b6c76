use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use zipfaug::augment::{
    build_generator, fit_record, fit_stage, imbalance_report_from_tags, label_sentences, r0_sweep,
    resample, run_pipeline, split, Backend, LabelStats, LabeledDataset, LabelingInputs, Law,
    ResampleMode, ResampleReport,
};
use zipfaug::classify::{classify_words, partition_sentences, PartitionSummary, SentencePartition};
use zipfaug::corpus::{ingest, to_plain_lines, Corpus, Sentence};
use zipfaug::genbridge::{
    orchestrate, GenerationCounts, GenerationFailure, JsonClient, RemoteConfig,
};
use zipfaug::labeler::{
    load_pos_lexicon, load_rules_with, load_triggers, Category, CompiledRule, LexiconTagger,
    PosTagger, RemoteTagger, Tagset, TriggerLexicon,
};
use zipfaug::zipffit::{quartile_analysis, FitRecord, SplitPoint};
use zipfaug::Error;

use crate::config::{existing, input, usage, CliError, RunConfig};

/// Resolved configuration plus the run directory.
pub struct Ctx {
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Ctx {
    pub fn new(config: RunConfig, out: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let ctx = Ctx { config, out };
        ctx.json("config.json", &ctx.config)?;
        Ok(ctx)
    }

    fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
        text.push('\n');
        self.write(name, text)
    }

    fn corpus_path(&self, what: &str) -> Result<&Path, CliError> {
        let path = self.config.corpus.as_deref().ok_or_else(|| {
            usage(format!(
                "no {what} given; pass --corpus or set `corpus` in the config"
            ))
        })?;
        existing(path, what)
    }

    fn load_corpus(&self) -> Result<Corpus, CliError> {
        let path = self.corpus_path("corpus")?;
        let corpus = input(ingest(path, self.config.corpus_format(path)), "corpus")?;
        log::info!(
            "{}: {} documents, {} sentences",
            path.display(),
            corpus.documents.len(),
            corpus.sentence_count()
        );
        Ok(corpus)
    }
}

fn staged<T>(stage: &'static str, r: zipfaug::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Runtime(e.in_stage(stage)))
}

/// Split point from a saved fit report, or a fresh fit of `corpus`.
fn split_point(
    ctx: &Ctx,
    corpus: &Corpus,
    fit_report: Option<&Path>,
) -> Result<SplitPoint, CliError> {
    let table = corpus.word_table();
    let split = match fit_report {
        Some(path) => {
            let text = fs::read_to_string(existing(path, "fit report")?)
                .map_err(|e| Error::io(path, e))?;
            let record: FitRecord = serde_json::from_str(&text)
                .map_err(|e| usage(format!("fit report {}: {e}", path.display())))?;
            let mut split = record
                .split_point()
                .ok_or_else(|| usage(format!("fit report {} has no r0", path.display())))?;
            if let Some(r0) = ctx.config.pipeline.r0 {
                split = SplitPoint::manual(r0);
            }
            split
        }
        None => {
            let (record, split) = staged("fit", fit_stage(&table, &ctx.config.pipeline))?;
            ctx.json("fit.json", &record)?;
            split
        }
    };
    if split.r0 > table.r_t() {
        return Err(usage(format!(
            "r0 = {} exceeds the corpus vocabulary of {} words",
            split.r0,
            table.r_t()
        )));
    }
    Ok(split)
}

fn partition(ctx: &Ctx, corpus: &Corpus, split: SplitPoint) -> Result<SentencePartition, CliError> {
    let table = corpus.word_table();
    let map = staged("classify", classify_words(&table, split))?;
    let sentences: Vec<Sentence> = corpus.sentences().cloned().collect();
    let part = partition_sentences(&sentences, &map);
    let summary: PartitionSummary = part.summary(&map);
    ctx.json("partition.json", &summary)?;
    ctx.write("common.txt", to_plain_lines(&part.common_sentences))?;
    ctx.write("rare.txt", to_plain_lines(&part.rare_sentences))?;
    log::info!(
        "r0 = {}: {} common, {} rare sentences",
        split.r0,
        summary.n_common,
        summary.n_rare
    );
    Ok(part)
}

pub fn fit(ctx: &Ctx) -> Result<(), CliError> {
    let corpus = ctx.load_corpus()?;
    let table = corpus.word_table();
    let pipeline = &ctx.config.pipeline;
    let grid = pipeline.beta_grid.map(|(lo, hi)| lo..=hi);
    let mut record = staged("fit", fit_record(&table, pipeline.law, grid))?;
    if pipeline.r0.is_some() {
        record.r0 = pipeline.r0;
    }
    if record.r0.is_none() {
        log::warn!(
            "beta = {:?} gives no turning point; set --r0 to classify",
            record.beta
        );
    }
    ctx.json("fit.json", &record)?;
    ctx.write("word_table.csv", table.to_csv())?;
    if let Ok(q) = quartile_analysis(&table) {
        ctx.json("quartiles.json", &q)?;
    }
    log::info!(
        "{} fit: alpha = {:.4}, r_squared = {:.4}, r0 = {:?}",
        record.method,
        record.alpha,
        record.r_squared,
        record.r0
    );
    Ok(())
}

pub fn classify(ctx: &Ctx, fit_report: Option<&Path>) -> Result<(), CliError> {
    let corpus = ctx.load_corpus()?;
    let split = split_point(ctx, &corpus, fit_report)?;
    partition(ctx, &corpus, split)?;
    Ok(())
}

fn check_backend(config: &RunConfig) -> Result<(), CliError> {
    let g = &config.pipeline.generator;
    if g.backend == Backend::Remote && g.remote.endpoint.is_empty() {
        return Err(usage("the remote backend needs --endpoint"));
    }
    Ok(())
}

#[derive(Serialize)]
struct GenerationSummary<'a> {
    backend: &'a str,
    seed: u64,
    counts: GenerationCounts,
    failures: &'a [GenerationFailure],
}

pub fn generate(ctx: &Ctx, fit_report: Option<&Path>) -> Result<(), CliError> {
    check_backend(&ctx.config)?;
    let corpus = ctx.load_corpus()?;
    let split = split_point(ctx, &corpus, fit_report)?;
    let part = partition(ctx, &corpus, split)?;
    let sentences: Vec<Sentence> = corpus.sentences().cloned().collect();
    let gen = &ctx.config.pipeline.generator;
    let backend = staged("generate", build_generator(gen, &sentences))?;
    let batch = staged(
        "generate",
        orchestrate(&part, backend.as_ref(), &gen.orchestration),
    )?;

    let mut jsonl = String::new();
    for g in &batch.outputs {
        jsonl.push_str(&serde_json::to_string(g).map_err(Error::from)?);
        jsonl.push('\n');
    }
    ctx.write("generated.jsonl", jsonl)?;
    let text: String = batch
        .outputs
        .iter()
        .map(|g| g.text.join(" ") + "\n")
        .collect();
    ctx.write("generated.txt", text)?;
    ctx.json(
        "generation.json",
        &GenerationSummary {
            backend: &backend.backend_id(),
            seed: gen.orchestration.seed,
            counts: batch.counts,
            failures: &batch.failures,
        },
    )?;
    log::info!(
        "{} inductive, {} expanded, {} failed",
        batch.counts.n_inductive,
        batch.counts.n_expanded,
        batch.failures.len()
    );
    Ok(())
}

struct Labeling {
    tagger: Box<dyn PosTagger>,
    rules: Vec<CompiledRule>,
    triggers: TriggerLexicon,
}

impl Labeling {
    fn load(config: &RunConfig) -> Result<Self, CliError> {
        let tagset = config
            .tagset
            .as_deref()
            .map(|n| input(Tagset::by_name(n), "tagset"))
            .transpose()?;
        let tagger: Box<dyn PosTagger> = match (&config.pos_endpoint, &config.pos_lexicon) {
            (Some(endpoint), _) => Box::new(RemoteTagger {
                client: JsonClient::new(RemoteConfig {
                    endpoint: endpoint.clone(),
                    ..config.pipeline.generator.remote.clone()
                }),
                tagset,
            }),
            (None, Some(path)) => {
                let lexicon = input(load_pos_lexicon(path), "POS lexicon")?;
                if let Some(t) = &tagset {
                    input(lexicon.check_tagset(t), "POS lexicon")?;
                }
                Box::new(LexiconTagger {
                    lexicon,
                    default_pos: config.pipeline.default_pos.clone(),
                })
            }
            (None, None) => return Err(usage("labeling needs --pos-lexicon or --pos-endpoint")),
        };
        let algorithm = &config.pipeline.algorithm;
        let rules = match &config.rules {
            Some(path) => input(load_rules_with(path, algorithm), "rule file")?,
            None => {
                log::info!("no rule file; using the built-in material and equipment rules");
                vec![
                    CompiledRule::builtin_material(),
                    CompiledRule::builtin_equipment(),
                ]
            }
        };
        let triggers = match &config.triggers {
            Some(path) => input(load_triggers(path), "trigger lexicon")?,
            None => TriggerLexicon::new(),
        };
        Ok(Labeling {
            tagger,
            rules,
            triggers,
        })
    }

    fn inputs(&self) -> LabelingInputs<'_> {
        LabelingInputs {
            tagger: self.tagger.as_ref(),
            rules: &self.rules,
            triggers: &self.triggers,
        }
    }
}

pub fn label(ctx: &Ctx) -> Result<(), CliError> {
    let labeling = Labeling::load(&ctx.config)?;
    let corpus = ctx.load_corpus()?;
    let sentences: Vec<Sentence> = corpus.sentences().cloned().collect();
    let p = &ctx.config.pipeline;
    let (ds, stats): (LabeledDataset, LabelStats) = staged(
        "label",
        label_sentences(
            &sentences,
            &labeling.inputs(),
            p.granularity,
            p.keep_unlabeled,
        ),
    )?;
    ctx.write("labeled.conll", ds.to_conll())?;
    ctx.json("label_stats.json", &stats)?;
    log::info!(
        "{} of {} spans verified; {} sentences kept",
        stats.verified_spans,
        stats.proposed_spans,
        stats.kept_sentences
    );
    Ok(())
}

pub struct AugmentArgs {
    pub resample: Option<ResampleMode>,
    pub target: Option<Category>,
    pub split: Option<(f64, f64, f64)>,
}

#[derive(Serialize)]
struct ResampleManifest<'a> {
    status: &'static str,
    seed: u64,
    report: &'a ResampleReport,
    sentences_before: usize,
    sentences_after: usize,
    timings_ms: u64,
}

/// Smallest non-zero category; first in category order on ties.
fn minority(counts: &zipfaug::augment::CategoryCounts) -> Option<Category> {
    counts
        .iter()
        .filter(|(_, &n)| n > 0)
        .min_by_key(|(_, &n)| n)
        .map(|(&c, _)| c)
}

pub fn augment(ctx: &Ctx, args: &AugmentArgs) -> Result<(), CliError> {
    let p = &ctx.config.pipeline;
    let seed = p.generator.orchestration.seed;
    let corpus = ctx.load_corpus()?;
    let augmented = match args.resample {
        Some(mode) => {
            let start = Instant::now();
            let raw = input(
                LabeledDataset::from_corpus(&corpus, p.granularity),
                "corpus",
            )?;
            let counts = raw.category_counts();
            let target = match args.target {
                Some(t) => t,
                None => minority(&counts)
                    .ok_or_else(|| usage("corpus has no labeled entities to resample"))?,
            };
            let (out, report) = staged("resample", resample(&raw, mode, target, seed))?;
            ctx.write("augmented.conll", out.to_conll())?;
            ctx.json("resample.json", &report)?;
            ctx.json(
                "manifest.json",
                &ResampleManifest {
                    status: "ok",
                    seed,
                    report: &report,
                    sentences_before: raw.len(),
                    sentences_after: out.len(),
                    timings_ms: start.elapsed().as_millis() as u64,
                },
            )?;
            out
        }
        None => {
            check_backend(&ctx.config)?;
            let labeling = Labeling::load(&ctx.config)?;
            let output = run_pipeline(&corpus, &labeling.inputs(), p, Some(&ctx.out))?;
            let c = &output.manifest.counts;
            log::info!(
                "r0 = {:?}; {} sentences added; categories {:?} -> {:?}",
                output.manifest.r0,
                c.added_sentences,
                c.categories_before,
                c.categories_after
            );
            output.augmented
        }
    };
    if let Some(ratios) = args.split {
        let (train, dev, test) = staged("split", split(&augmented, ratios, seed))?;
        ctx.write("train.conll", train.to_conll())?;
        ctx.write("dev.conll", dev.to_conll())?;
        ctx.write("test.conll", test.to_conll())?;
    }
    Ok(())
}

pub fn report(ctx: &Ctx, exclusion_max: usize) -> Result<(), CliError> {
    let corpus = ctx.load_corpus()?;
    if corpus.sentences().all(|s| s.labels.is_none()) {
        return Err(usage("report needs a labeled (CoNLL) corpus"));
    }
    let r = imbalance_report_from_tags(corpus.sentences(), exclusion_max);
    ctx.json("report.json", &r)?;
    ctx.write("entity_table.csv", r.table().to_csv())?;
    ctx.write("exclusion.csv", r.exclusion.to_csv())?;
    log::info!(
        "{} entities, {} distinct, {:.2}% seen once",
        r.total_entities,
        r.distinct_entities,
        100.0 * r.frequency_one_share
    );
    Ok(())
}

pub fn sweep(ctx: &Ctx, fit_report: Option<&Path>, offsets: &[i32]) -> Result<(), CliError> {
    let corpus = ctx.load_corpus()?;
    let split = split_point(ctx, &corpus, fit_report)?;
    let report = staged("sweep", r0_sweep(&corpus, split, offsets))?;
    ctx.json("sweep.json", &report)?;
    ctx.write("sweep.csv", report.to_csv())?;
    Ok(())
}

/// Law-specific flag checks.
pub fn check_law(law: Law, beta_grid_flag: bool) -> Result<(), CliError> {
    if law == Law::Classical && beta_grid_flag {
        return Err(usage("--beta-grid only applies to --law extended"));
    }
    Ok(())
}
