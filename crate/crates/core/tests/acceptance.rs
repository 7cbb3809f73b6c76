//! Acceptance criteria, one pass/fail line each. Exits non-zero if any fail.
//!
//! Criterion 8 runs against the Resume NER corpus when `RESUME_NER_PATH`
//! points at it (a CoNLL file or a directory of them) and against a synthetic
//! heavy-tailed fixture otherwise.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zipfaug::augment::{
    imbalance_report_from_tags, label_sentences, run_pipeline, LabelingInputs, PipelineConfig,
};
use zipfaug::classify::{classify_words, partition_sentences, SentencePartition};
use zipfaug::corpus::{build_frequency_table, ingest, Format, FrequencyTable, Sentence};
use zipfaug::genbridge::{
    orchestrate, parse_articles, parse_titled, planned_counts, serialize_articles,
    serialize_titled, ArticleCorpus, GenerationTask, Generator, OrchestrationConfig, TitledCorpus,
    TitledPair,
};
use zipfaug::labeler::{
    apply_rules, compile_rule, emit_bio, entity_chunks, is_well_formed, load_pos_lexicon,
    load_rules, load_triggers, pos_tag, verify_triggers, Annotations, BioLabel, Category,
    CompiledRule, Granularity, LexiconTagger, PosLexicon, RuleFamily, RuleSpec, TaggedToken,
    TriggerLexicon,
};
use zipfaug::zipffit::{
    find_r0_classical, find_r0_extended, fit_classical, fit_classical_points, fit_extended_points,
    ClassicalFit, ExtendedFit, RankRange, SplitPoint,
};

type Criterion = (&'static str, fn() -> String);

fn main() {
    let criteria: [Criterion; 9] = [
        ("zipf recovery", zipf_recovery),
        ("classical split oracle", classical_split_oracle),
        ("extended split", extended_split),
        ("generation count law", count_law),
        ("labeling golden rows", labeling_golden),
        ("serializer round trips", serializer_round_trips),
        ("BIO well-formedness", bio_well_formed),
        ("entity-level zipf", entity_level_zipf),
        ("end-to-end augment", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check));
        let took = start.elapsed().as_secs_f64();
        match outcome {
            Ok(note) => println!("criterion {} {name}: PASS ({took:.2}s) {note}", i + 1),
            Err(payload) => {
                failed += 1;
                let msg = payload
                    .downcast_ref::<String>()
                    .map(String::as_str)
                    .or_else(|| payload.downcast_ref::<&str>().copied())
                    .unwrap_or("panic");
                println!("criterion {} {name}: FAIL ({took:.2}s) {msg}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Independent least squares in log10 space: (alpha, R²).
fn oracle_ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    (-sxy / sxx, sxy * sxy / (sxx * syy))
}

/// Multinomial sample of `tokens` draws from `p(r) ∝ r^-alpha`, `r <= r_t`.
fn zipf_sample(alpha: f64, r_t: usize, tokens: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut cumulative = Vec::with_capacity(r_t);
    let mut total = 0.0;
    for r in 1..=r_t {
        total += (r as f64).powf(-alpha);
        cumulative.push(total);
    }
    let mut counts = vec![0u64; r_t];
    for _ in 0..tokens {
        let u = rng.random::<f64>() * total;
        let i = cumulative.partition_point(|&c| c <= u).min(r_t - 1);
        counts[i] += 1;
    }
    counts
}

fn zipf_recovery() -> String {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut misses = 0;
    for alpha in [0.7, 1.0, 1.3] {
        let exact: Vec<(f64, f64)> = (1..=5000)
            .map(|r| (r as f64, 1e6 * (r as f64).powf(-alpha)))
            .collect();
        let fit = fit_classical_points(&exact).unwrap();
        assert!(
            (fit.alpha - alpha).abs() <= 1e-6,
            "exact alpha {}",
            fit.alpha
        );
        assert!(fit.r_squared >= 1.0 - 1e-9, "exact R² {}", fit.r_squared);

        let mut rng = ChaCha8Rng::seed_from_u64((alpha * 1000.0) as u64);
        let counts = zipf_sample(alpha, 5000, 1_000_000, &mut rng);
        let table = FrequencyTable::from_counts(
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (format!("w{i}"), c)),
        );
        let fit = fit_classical(&table).unwrap();
        let (oracle_alpha, oracle_r2) = oracle_ols(&table.points());
        assert!((fit.alpha - oracle_alpha).abs() <= 1e-9);
        assert!((fit.r_squared - oracle_r2).abs() <= 1e-9);
        let ok = (fit.alpha - alpha).abs() <= 0.05 && fit.r_squared >= 0.95;
        misses += usize::from(!ok);
        notes.push(format!(
            "alpha {alpha}: sampled {:.4} R² {:.4}{}",
            fit.alpha,
            fit.r_squared,
            if ok { "" } else { " (out of tolerance)" }
        ));
    }
    let notes = notes.join(", ");
    assert_eq!(misses, 0, "{notes}");
    assert!(start.elapsed() < Duration::from_secs(10), "too slow");
    notes
}

/// Closed-form curvature maximizer of `C r^-alpha`.
fn curvature_argmax(alpha: f64, c: f64) -> f64 {
    (alpha * alpha * c * c * (2.0 * alpha + 1.0) / (alpha + 2.0)).powf(1.0 / (2.0 * alpha + 2.0))
}

fn classical_split_oracle() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let r_t = 10_000;
    for _ in 0..1000 {
        let alpha = rng.random_range(0.5..=1.5);
        let c = 10f64.powf(rng.random_range(2.0..=5.0));
        let fit = ClassicalFit::from_params(alpha, c, r_t).unwrap();
        let got = find_r0_classical(&fit, r_t).unwrap().r0 as f64;
        let want = curvature_argmax(alpha, c).round();
        assert!(
            (got - want).abs() <= 1.0,
            "alpha {alpha} c {c}: numeric {got}, closed form {want}"
        );
    }
    let petroleum = ClassicalFit::from_params(0.965, 51756.0, 5416).unwrap();
    let r0 = find_r0_classical(&petroleum, 5416).unwrap().r0;
    assert!((244..=246).contains(&r0), "petroleum r0 {r0}");
    let reference = 239.0;
    let gap = (r0 as f64 - reference).abs() / reference;
    assert!(
        gap <= 0.05,
        "petroleum r0 {r0} is {gap:.3} from {reference}"
    );
    format!("petroleum r0 {r0} ({:.1}% from reference 239)", gap * 100.0)
}

fn extended_split() -> String {
    let table = [
        (0.097, 71.394, -81.0, 81),
        (0.087, 64.852, -87.0, 87),
        (0.116, 62.278, -30.0, 30),
        (0.094, 68.330, -65.0, 65),
    ];
    for (alpha, c, beta, want) in table {
        let fit = ExtendedFit {
            alpha,
            c,
            beta,
            r_squared: 1.0,
            fit_domain: RankRange {
                first: 1,
                last: 5416,
            },
        };
        assert_eq!(find_r0_extended(&fit).unwrap().r0, want);
    }
    let mut recovered = Vec::new();
    for (beta, alpha) in [(-81i64, 0.9), (-87, 0.8), (-30, 1.1), (-65, 0.6)] {
        let points: Vec<(f64, f64)> = ((1 - beta)..=3000)
            .map(|r| (r as f64, 1e5 / ((r + beta) as f64).powf(alpha)))
            .collect();
        let fit = fit_extended_points(&points, -500..=0).unwrap();
        assert!(
            (fit.beta - beta as f64).abs() <= 1.0,
            "planted beta {beta}, fitted {}",
            fit.beta
        );
        let r0 = find_r0_extended(&fit).unwrap().r0 as i64;
        assert!((r0 + beta).abs() <= 1);
        recovered.push(fit.beta.to_string());
    }
    format!("fitted beta {}", recovered.join(" "))
}

struct Echo;

impl Generator for Echo {
    fn backend_id(&self) -> String {
        "echo".into()
    }

    fn generate(&self, task: &GenerationTask<'_>) -> zipfaug::Result<Vec<Vec<String>>> {
        Ok(vec![task.prompt.clone(); task.num_return])
    }
}

fn synthetic_partition(n_common: usize, n_rare: usize) -> SentencePartition {
    SentencePartition {
        common_sentences: (0..n_common)
            .map(|i| Sentence::from_text("c", i, "the pump is running"))
            .collect(),
        rare_sentences: (0..n_rare)
            .map(|i| Sentence::from_text("r", i, "phosgene boiler corrodes"))
            .collect(),
    }
}

fn count_law() -> String {
    let config = OrchestrationConfig::default();
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    runner
        .run(&(0usize..150, 0usize..150), |(n_common, n_rare)| {
            let batch =
                orchestrate(&synthetic_partition(n_common, n_rare), &Echo, &config).unwrap();
            assert_eq!(batch.counts.n_inductive, n_common);
            assert_eq!(batch.counts.n_expanded, 2 * n_rare);
            assert_eq!(batch.counts, planned_counts(n_common, n_rare));
            assert_eq!(batch.outputs.len(), n_common + 2 * n_rare);
            Ok(())
        })
        .unwrap();

    // partitions produced by the classifier itself
    let vocab: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..64 {
        let sentences: Vec<Sentence> = (0..rng.random_range(1..80))
            .map(|i| {
                let len = rng.random_range(1..12);
                let words: Vec<&str> = (0..len)
                    .map(|_| vocab[rng.random_range(0..vocab.len())].as_str())
                    .collect();
                Sentence::new("doc", i, words)
            })
            .collect();
        let table = build_frequency_table(sentences.iter().flat_map(|s| s.surfaces()));
        let r0 = rng.random_range(1..=table.r_t());
        let map = classify_words(&table, SplitPoint::manual(r0)).unwrap();
        let part = partition_sentences(&sentences, &map);
        assert_eq!(part.len(), sentences.len(), "case {case}");
        let batch = orchestrate(&part, &Echo, &config).unwrap();
        assert_eq!(batch.counts.n_inductive, part.common_sentences.len());
        assert_eq!(batch.counts.n_expanded, 2 * part.rare_sentences.len());
    }

    let batch = orchestrate(&synthetic_partition(1603, 3122), &Echo, &config).unwrap();
    assert_eq!(
        (batch.counts.n_inductive, batch.counts.n_expanded),
        (1603, 6244)
    );
    format!(
        "1603/3122 -> {}/{}",
        batch.counts.n_inductive, batch.counts.n_expanded
    )
}

fn label_row(text: &str, lexicon: &PosLexicon) -> Vec<(String, String)> {
    let rules = [
        CompiledRule::builtin_material(),
        CompiledRule::builtin_equipment(),
    ];
    let sentence = Sentence::from_text("table5", 0, text);
    let tagged = pos_tag(&sentence, lexicon, "x");
    let spans = apply_rules(&rules, &tagged, &Annotations::default());
    emit_bio(&sentence, &spans, Granularity::Word)
        .unwrap()
        .into_iter()
        .map(|r| (r.surface, r.label.to_string()))
        .collect()
}

fn pairs(row: &[(&str, &str)]) -> Vec<(String, String)> {
    row.iter()
        .map(|(w, l)| (w.to_string(), l.to_string()))
        .collect()
}

fn labeling_golden() -> String {
    let start = Instant::now();
    let lexicon = load_pos_lexicon(&fixtures().join("table5/pos_lexicon.tsv")).unwrap();

    // Row 1 is tagged in POS-row order; the reference labeling row lists the
    // same tokens with "liquid level" moved to the front.
    let got = label_row(
        "high alarm sulfur generation waste heat boiler liquid level too low",
        &lexicon,
    );
    let reference = pairs(&[
        ("liquid", "O"),
        ("level", "O"),
        ("high", "B-EQU"),
        ("alarm", "I-EQU"),
        ("sulfur", "I-EQU"),
        ("generation", "I-EQU"),
        ("waste", "I-EQU"),
        ("heat", "I-EQU"),
        ("boiler", "I-EQU"),
        ("too", "O"),
        ("low", "O"),
    ]);
    let by_token =
        |rows: &[(String, String)]| -> BTreeMap<String, String> { rows.iter().cloned().collect() };
    assert_eq!(got.len(), reference.len());
    assert_eq!(by_token(&got), by_token(&reference));
    let tags: Vec<&str> = got.iter().map(|(_, l)| l.as_str()).collect();
    assert_eq!(entity_chunks(&tags), [("EQU".to_string(), 0, 6)]);

    let got = label_row(
        "vinyl chloride , hydrogen sulfide and sulfur dioxide exceed the standard",
        &lexicon,
    );
    assert_eq!(
        got,
        pairs(&[
            ("vinyl", "B-MAT"),
            ("chloride", "I-MAT"),
            (",", "O"),
            ("hydrogen", "O"),
            ("sulfide", "O"),
            ("and", "O"),
            ("sulfur", "B-MAT"),
            ("dioxide", "I-MAT"),
            ("exceed", "O"),
            ("the", "O"),
            ("standard", "O"),
        ])
    );

    let rule = compile_rule(&RuleSpec::new(
        RuleFamily::KeywordPattern,
        "^[Who]$books$[*]$[What]$from$[Where]$to$[Where]$[*]$[Time]*$",
        Category::CON,
    ))
    .unwrap();
    let sentence = Sentence::from_text(
        "kw",
        0,
        "Johnson books a flight from Washington to London tomorrow .",
    );
    let tagged = pos_tag(&sentence, &PosLexicon::default(), "x");
    let words: Vec<&str> = sentence.surfaces().collect();
    let groups = rule.bindings(&tagged);
    assert_eq!(groups.len(), 1);
    let bound: Vec<(String, String)> = groups[0]
        .iter()
        .map(|b| (b.name.clone(), words[b.start..=b.end].join(" ")))
        .collect();
    assert_eq!(
        bound,
        pairs(&[
            ("Who", "Johnson"),
            ("What", "a flight"),
            ("Where", "Washington"),
            ("Where", "London"),
            ("Time", "tomorrow"),
        ])
    );
    assert!(start.elapsed() < Duration::from_secs(1), "too slow");
    String::new()
}

const FUZZ_CHARS: &[char] = &[
    'a', 'b', 'x', 'S', 'E', 'P', 'M', 'A', 'K', 'C', 'L', 'O', '[', ']', 'é', '中', '.', ' ',
];

fn fuzz_text(rng: &mut ChaCha8Rng, max_len: usize, spaces: bool) -> String {
    let pool = if spaces {
        FUZZ_CHARS
    } else {
        &FUZZ_CHARS[..FUZZ_CHARS.len() - 1]
    };
    (0..rng.random_range(0..=max_len))
        .map(|_| pool[rng.random_range(0..pool.len())])
        .collect()
}

fn fuzz_words(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n)
        .map(|_| {
            let mut w = fuzz_text(rng, 6, false);
            w.push('w');
            w
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn serializer_round_trips() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut articles, mut titled) = (0, 0);
    while articles < 10_000 {
        let raw: Vec<Vec<String>> = (0..rng.random_range(0..4))
            .map(|_| {
                (0..rng.random_range(1..4))
                    .map(|_| fuzz_text(&mut rng, 24, true))
                    .collect()
            })
            .collect();
        let Ok(corpus) = ArticleCorpus::new(raw) else {
            continue;
        };
        let text = serialize_articles(&corpus);
        assert_eq!(parse_articles(&text).unwrap(), corpus, "{text:?}");
        articles += 1;
    }
    while titled < 10_000 {
        let pairs: Vec<TitledPair> = (0..rng.random_range(0..3))
            .map(|_| {
                let nt = rng.random_range(2..6);
                let nc = rng.random_range(100..120);
                TitledPair {
                    title: fuzz_words(&mut rng, nt),
                    content: fuzz_words(&mut rng, nc),
                }
            })
            .collect();
        let Ok(corpus) = TitledCorpus::new(pairs) else {
            continue;
        };
        let text = serialize_titled(&corpus);
        assert_eq!(parse_titled(&text).unwrap(), corpus, "{text:?}");
        titled += 1;
    }
    format!("{articles} article corpora, {titled} titled corpora")
}

fn fuzz_rule_pool() -> Vec<CompiledRule> {
    let spec = |family, body: &str, category| compile_rule(&RuleSpec::new(family, body, category));
    vec![
        CompiledRule::builtin_material(),
        CompiledRule::builtin_equipment(),
        spec(RuleFamily::PosSequence, "{a?, n+}", Category::EQU).unwrap(),
        spec(RuleFamily::PosSequence, "{nz+}", Category::MAT).unwrap(),
        spec(RuleFamily::PosSequence, "{v, n|nz}", Category::CON).unwrap(),
        spec(RuleFamily::PosSequence, "{d|a, a}", Category::STA).unwrap(),
        spec(
            RuleFamily::RegularExpression,
            "w1[0-9]( w[0-9]+)?",
            Category::STA,
        )
        .unwrap(),
        spec(RuleFamily::KeywordPattern, "w3$[*]$w4$", Category::CON).unwrap(),
    ]
}

fn bio_well_formed() -> String {
    const TAGS: [&str; 8] = ["n", "nz", "a", "v", "d", "q", "x", "c"];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vocab: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
    let pool = fuzz_rule_pool();
    let mut spans_seen = 0;
    let mut sentences = Vec::new();
    for i in 0..10_000 {
        let words: Vec<&str> = (0..rng.random_range(1..16))
            .map(|_| vocab[rng.random_range(0..vocab.len())].as_str())
            .collect();
        let sentence = Sentence::new("fuzz", i, words);
        let mut tagged = Vec::new();
        let mut unit = 0;
        for (j, w) in sentence.surfaces().enumerate() {
            if j > 0 && rng.random_bool(0.7) {
                unit += 1;
            }
            tagged.push(TaggedToken {
                surface: w.to_string(),
                pos: TAGS[rng.random_range(0..TAGS.len())].to_string(),
                unit,
            });
        }
        let mut rules = pool.clone();
        rules.shuffle(&mut rng);
        rules.truncate(rng.random_range(0..=pool.len()));
        let mut triggers = TriggerLexicon::new();
        if rng.random_bool(0.5) {
            triggers.insert(Category::EQU, BTreeSet::from(["w1".to_string()]));
        }
        let spans: Vec<_> = apply_rules(&rules, &tagged, &Annotations::default())
            .into_iter()
            .filter(|s| verify_triggers(s, &triggers))
            .collect();
        spans_seen += spans.len();
        for granularity in [Granularity::Word, Granularity::Character] {
            let labels: Vec<BioLabel> = emit_bio(&sentence, &spans, granularity)
                .unwrap()
                .into_iter()
                .map(|r| r.label)
                .collect();
            assert!(is_well_formed(&labels), "{:?} {labels:?}", sentence.text());
        }
        sentences.push(sentence);
    }

    let mut lexicon = PosLexicon::default();
    for w in &vocab {
        lexicon.insert(w, TAGS[rng.random_range(0..TAGS.len())]);
    }
    lexicon.insert("w1 w2", "n");
    lexicon.insert("w5 w6 w7", "nz");
    let tagger = LexiconTagger {
        lexicon,
        default_pos: "x".into(),
    };
    let triggers = TriggerLexicon::new();
    let inputs = LabelingInputs {
        tagger: &tagger,
        rules: &pool,
        triggers: &triggers,
    };
    for granularity in [Granularity::Word, Granularity::Character] {
        let (dataset, stats) = label_sentences(&sentences, &inputs, granularity, true).unwrap();
        assert_eq!(stats.kept_sentences, sentences.len());
        for s in dataset.sentences() {
            assert!(is_well_formed(&s.labels), "{:?}", s.tokens);
        }
    }
    format!("{spans_seen} spans over 10000 sentences")
}

fn entity_level_zipf() -> String {
    match std::env::var_os("RESUME_NER_PATH") {
        Some(path) => resume_ner(Path::new(&path)),
        None => synthetic_entities(),
    }
}

fn resume_ner(path: &Path) -> String {
    let corpus = ingest(path, Format::ConllBio).unwrap();
    let report = imbalance_report_from_tags(corpus.sentences(), 40);
    assert_eq!(
        (report.frequency_one, report.distinct_entities),
        (5159, 6156)
    );
    let points = &report.exclusion.points;
    assert!(
        (points[0].r_squared - 0.750).abs() <= 0.01,
        "{:?}",
        points[0]
    );
    assert!(
        (points[1].r_squared - 0.946).abs() <= 0.01,
        "{:?}",
        points[1]
    );
    assert!(points[25].r_squared > 0.97, "{:?}", points[25]);
    format!(
        "Resume NER: share {:.4}, R² {:.3} -> {:.3}, n=25 {:.3}",
        report.frequency_one_share, points[0].r_squared, points[1].r_squared, points[25].r_squared
    )
}

fn synthetic_entities() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let counts = zipf_sample(1.1, 3000, 20_000, &mut rng);
    let mut sentences = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            let cat = Category::ALL[rng.random_range(0..Category::ALL.len())];
            let id = sentences.len();
            sentences.push(
                Sentence::new("syn", id, [format!("e{i}"), "ok".to_string()])
                    .with_labels(vec![format!("B-{cat}"), "O".to_string()]),
            );
        }
    }
    let report = imbalance_report_from_tags(&sentences, 40);
    let distinct = counts.iter().filter(|&&c| c > 0).count();
    let ones = counts.iter().filter(|&&c| c == 1).count();
    assert_eq!(report.distinct_entities, distinct);
    assert_eq!(report.total_entities, 20_000);
    assert_eq!(report.frequency_one, ones);
    assert_eq!(report.frequency_one_share, ones as f64 / distinct as f64);

    let fit = report.fit.unwrap();
    let points = &report.exclusion.points;
    assert_eq!(points[0].n, 0);
    assert_eq!(points[0].survivors, distinct);
    assert_eq!(points[0].r_squared, fit.r_squared);
    assert_eq!(points[0].alpha, fit.alpha);
    for w in points.windows(2) {
        assert_eq!(w[1].n, w[0].n + 1);
        assert!(w[1].survivors <= w[0].survivors);
    }
    // n = 1 drops exactly the singletons
    assert_eq!(points[1].survivors, distinct - ones);
    format!(
        "synthetic: share {:.3}, R² {:.3} -> {:.3}, {} exclusion points",
        report.frequency_one_share,
        points[0].r_squared,
        points[1].r_squared,
        points.len()
    )
}

fn run_fixture(out: &Path) -> (zipfaug::augment::PipelineOutput, Duration) {
    let dir = fixtures().join("hazop");
    let raw: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    let config: PipelineConfig = serde_json::from_value(raw["pipeline"].clone()).unwrap();
    let corpus = ingest(&dir.join("corpus.conll"), Format::ConllBio).unwrap();
    let tagger = LexiconTagger {
        lexicon: load_pos_lexicon(&dir.join("pos_lexicon.tsv")).unwrap(),
        default_pos: config.default_pos.clone(),
    };
    let rules = load_rules(&dir.join("rules.json")).unwrap();
    let triggers = load_triggers(&dir.join("triggers.json")).unwrap();
    let inputs = LabelingInputs {
        tagger: &tagger,
        rules: &rules,
        triggers: &triggers,
    };
    let start = Instant::now();
    let output = run_pipeline(&corpus, &inputs, &config, Some(out)).unwrap();
    (output, start.elapsed())
}

fn without_timings(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timings_ms");
    v
}

fn end_to_end() -> String {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (out, took) = run_fixture(&a);
    assert!(took < Duration::from_secs(60), "run took {took:?}");
    run_fixture(&b);

    let counts = &out.manifest.counts;
    let (before, after) = (&counts.categories_before, &counts.categories_after);
    for cat in [Category::MAT, Category::EQU] {
        assert!(after[&cat] > before[&cat], "{cat}: {before:?} -> {after:?}");
    }
    for cat in [Category::CON, Category::STA] {
        assert_eq!(after[&cat], before[&cat], "{cat}");
    }

    let mut files = 0;
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        let (pa, pb) = (a.join(&name), b.join(&name));
        if name == "manifest.json" {
            assert_eq!(without_timings(&pa), without_timings(&pb));
        } else {
            assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap(), "{name:?}");
        }
        files += 1;
    }
    let show = |m: &BTreeMap<Category, usize>| {
        m.iter()
            .map(|(c, n)| format!("{c} {n}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!(
        "{} -> {}, {files} artifacts identical",
        show(before),
        show(after)
    )
}
