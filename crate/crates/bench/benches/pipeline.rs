use std::path::{Path, PathBuf};

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use zipfaug::augment::{label_sentences, LabelingInputs};
use zipfaug::classify::{classify_words, partition_sentences};
use zipfaug::corpus::{ingest, Format, Sentence};
use zipfaug::genbridge::{generate, train_markov};
use zipfaug::labeler::{load_pos_lexicon, load_rules, load_triggers, Granularity, LexiconTagger};
use zipfaug::zipffit::{default_beta_grid, find_r0_classical, fit_classical, fit_extended};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures/hazop")
        .join(name)
}

fn sentences() -> Vec<Sentence> {
    ingest(&fixture("corpus.conll"), Format::ConllBio)
        .expect("fixture corpus")
        .sentences()
        .cloned()
        .collect()
}

fn fitting(c: &mut Criterion) {
    let table = ingest(&fixture("corpus.conll"), Format::ConllBio)
        .unwrap()
        .word_table();
    c.bench_function("fit_classical", |b| {
        b.iter(|| fit_classical(black_box(&table)).unwrap())
    });
    c.bench_function("fit_extended", |b| {
        b.iter(|| fit_extended(black_box(&table), default_beta_grid(table.r_t())).unwrap())
    });
}

fn partitioning(c: &mut Criterion) {
    let corpus = ingest(&fixture("corpus.conll"), Format::ConllBio).unwrap();
    let table = corpus.word_table();
    let split = find_r0_classical(&fit_classical(&table).unwrap(), table.r_t()).unwrap();
    let map = classify_words(&table, split).unwrap();
    let sentences = sentences();
    c.bench_function("partition_sentences", |b| {
        b.iter(|| partition_sentences(black_box(&sentences), &map))
    });
}

fn markov(c: &mut Criterion) {
    let sentences = sentences();
    c.bench_function("train_markov", |b| {
        b.iter(|| train_markov(black_box(&sentences), 2, 0.01).unwrap())
    });
    let model = train_markov(&sentences, 2, 0.01).unwrap();
    let prompt: Vec<&str> = sentences[0].surfaces().take(2).collect();
    let mut seed = 0;
    c.bench_function("markov_generate", |b| {
        b.iter(|| {
            seed += 1;
            generate(&model, black_box(&prompt), 100, seed)
        })
    });
}

fn labeling(c: &mut Criterion) {
    let sentences = sentences();
    let tagger = LexiconTagger {
        lexicon: load_pos_lexicon(&fixture("pos_lexicon.tsv")).unwrap(),
        default_pos: "x".into(),
    };
    let rules = load_rules(&fixture("rules.json")).unwrap();
    let triggers = load_triggers(&fixture("triggers.json")).unwrap();
    let inputs = LabelingInputs {
        tagger: &tagger,
        rules: &rules,
        triggers: &triggers,
    };
    c.bench_function("label_sentences", |b| {
        b.iter(|| {
            label_sentences(black_box(&sentences), &inputs, Granularity::Word, false).unwrap()
        })
    });
}

criterion_group!(benches, fitting, partitioning, markov, labeling);
criterion_main!(benches);
