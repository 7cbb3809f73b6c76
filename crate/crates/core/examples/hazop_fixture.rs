//! Regenerates the bundled synthetic HAZOP-style fixture.
//!
//! Most sentences are skeletons of word-class slots drawn from a few
//! templates. Every word type of those classes gets an exact Zipf count
//! `C / r`, ranks are distributed over the classes so each class total
//! matches its slot count, and the slots are filled from the shuffled
//! per-class multisets. The remaining sentences are terse records pairing a
//! planted rare material with planted rare equipment; they use tail words
//! only, so they classify as rare.
//!
//! Usage: cargo run --release -p zipfaug --example hazop_fixture [OUT_DIR]

use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zipfaug::corpus::{build_frequency_table, ConllWriter};
use zipfaug::zipffit::fit_classical;

const SENTENCES: usize = 200;
const PER_DOCUMENT: usize = 20;
const SEED: u64 = 20_240_601;
const PLANTED_COPIES: usize = 3;
const RECORDS: usize = PLANTED_MATERIALS.len() * PLANTED_COPIES;
const MIN_R2: f64 = 0.98;

type Labeled = Vec<(String, String)>;

const TEMPLATES: &[&str] = &[
    "D E A AUX S COMMA REL V C",
    "S A P D E V C P M",
    "M VL P D E CJ V C",
    "C P D E V2 S A",
    "D E A AUX S CJ M VL",
    "S A P M P D E V C CJ C",
    "D E V3 M CJ V C",
    "M P D E AUX S COMMA REL V C",
];

struct Class {
    name: &'static str,
    tag: &'static str,
    label: Option<&'static str>,
    /// Most frequent first.
    items: &'static [&'static str],
}

const CLASSES: &[Class] = &[
    Class {
        name: "D",
        tag: "r",
        label: None,
        items: &["the", "each", "this", "a"],
    },
    Class {
        name: "P",
        tag: "p",
        label: None,
        items: &["in", "of", "from", "at", "near", "inside", "through", "to"],
    },
    Class {
        name: "V",
        tag: "v",
        label: None,
        items: &["causes", "triggers", "induces", "produces"],
    },
    Class {
        name: "V2",
        tag: "v",
        label: None,
        items: &["follows", "indicates", "reflects"],
    },
    Class {
        name: "V3",
        tag: "v",
        label: None,
        items: &["contains", "stores", "handles", "transfers"],
    },
    Class {
        name: "AUX",
        tag: "v",
        label: None,
        items: &["is", "becomes", "remains"],
    },
    Class {
        name: "REL",
        tag: "r",
        label: None,
        items: &["which", "that"],
    },
    Class {
        name: "CJ",
        tag: "c",
        label: None,
        items: &["and", "or", "then"],
    },
    Class {
        name: "VL",
        tag: "v",
        label: None,
        items: &["leaks", "escapes", "vents", "spills"],
    },
    Class {
        name: "COMMA",
        tag: "x",
        label: None,
        items: &[","],
    },
    Class {
        name: "A",
        tag: "n",
        label: None,
        items: &["pressure", "level", "temperature", "flow", "composition"],
    },
    Class {
        name: "S",
        tag: "a",
        label: Some("STA"),
        items: &[
            "high",
            "low",
            "abnormal",
            "reverse",
            "fluctuating",
            "unstable",
            "excessive",
            "insufficient",
        ],
    },
    Class {
        name: "C",
        tag: "vn",
        label: Some("CON"),
        items: &[
            "overpressure",
            "leakage",
            "fire",
            "explosion",
            "rupture",
            "poisoning",
            "corrosion",
            "blockage",
            "cavitation",
            "vibration",
        ],
    },
    Class {
        name: "M",
        tag: "nz",
        label: Some("MAT"),
        items: &[
            "hydrogen", "methanol", "benzene", "ammonia", "diesel", "naphtha", "toluene",
        ],
    },
    Class {
        name: "EM",
        tag: "n",
        label: Some("EQU"),
        items: &[
            "feed", "reflux", "outlet", "inlet", "storage", "cooling", "steam", "fuel", "recycle",
            "product", "flare",
        ],
    },
    Class {
        name: "EH",
        tag: "n",
        label: Some("EQU"),
        items: &[
            "tank",
            "pump",
            "valve",
            "compressor",
            "reactor",
            "column",
            "pipeline",
            "exchanger",
            "separator",
            "drum",
            "furnace",
            "filter",
            "cooler",
            "vessel",
            "heater",
            "condenser",
        ],
    },
];

const PLANTED_MATERIALS: &[&str] = &["vinyl chloride", "sulfur dioxide", "phosgene", "acetylene"];
const PLANTED_EQUIPMENT: &[&str] = &["waste heat boiler", "amine absorber", "claus incinerator"];
const RECORD_VERBS: &[&str] = &["corrodes", "contaminates", "saturates"];

/// Probability that a regular equipment slot gets a modifier.
const MODIFIED_EQUIPMENT: f64 = 0.65;

fn class_index(name: &str) -> usize {
    CLASSES
        .iter()
        .position(|c| c.name == name)
        .unwrap_or_else(|| panic!("unknown class {name}"))
}

/// Template skeletons; each inner group is one word or one equipment span.
fn skeletons(rng: &mut ChaCha8Rng) -> Vec<Vec<Vec<usize>>> {
    (0..SENTENCES - RECORDS)
        .map(|_| {
            TEMPLATES[rng.random_range(0..TEMPLATES.len())]
                .split(' ')
                .map(|t| match t {
                    "E" if rng.random_bool(MODIFIED_EQUIPMENT) => {
                        vec![class_index("EM"), class_index("EH")]
                    }
                    "E" => vec![class_index("EH")],
                    other => vec![class_index(other)],
                })
                .collect()
        })
        .collect()
}

fn span(text: &str, category: Option<&str>, out: &mut Labeled) {
    for (i, w) in text.split(' ').enumerate() {
        let tag = match category {
            Some(cat) if i == 0 => format!("B-{cat}"),
            Some(cat) => format!("I-{cat}"),
            None => "O".to_string(),
        };
        out.push((w.to_string(), tag));
    }
}

/// `material verb equipment`, every planted material `PLANTED_COPIES` times.
fn records() -> Vec<Labeled> {
    (0..RECORDS)
        .map(|j| {
            let mut s = Labeled::new();
            span(PLANTED_MATERIALS[j / PLANTED_COPIES], Some("MAT"), &mut s);
            span(
                RECORD_VERBS[(j + j / PLANTED_COPIES) % RECORD_VERBS.len()],
                None,
                &mut s,
            );
            span(
                PLANTED_EQUIPMENT[j % PLANTED_EQUIPMENT.len()],
                Some("EQU"),
                &mut s,
            );
            s
        })
        .collect()
}

/// Integer Zipf counts `C / r` over `types` ranks summing to `total`.
fn zipf_counts(types: usize, total: usize) -> Vec<usize> {
    let h: f64 = (1..=types).map(|r| 1.0 / r as f64).sum();
    let exact: Vec<f64> = (1..=types).map(|r| total as f64 / h / r as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..types).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let short = total - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Distributes ranks over classes (exactly `sizes[k]` each) so class sums
/// approach `demand[k]`.
fn assign_ranks(
    counts: &[usize],
    sizes: &[usize],
    demand: &[usize],
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    let k = sizes.len();
    let mut owner = vec![0usize; counts.len()];
    let mut free = sizes.to_vec();
    let mut sum = vec![0i64; k];
    for (r, &c) in counts.iter().enumerate() {
        let need = |j: usize| (demand[j] as i64 - sum[j]) as f64 / free[j] as f64;
        let best = (0..k)
            .filter(|&j| free[j] > 0)
            .max_by(|&a, &b| need(a).total_cmp(&need(b)))
            .expect("capacity matches the rank count");
        owner[r] = best;
        free[best] -= 1;
        sum[best] += c as i64;
    }
    let cost = |sum: &[i64]| -> i64 {
        sum.iter()
            .zip(demand)
            .map(|(s, &d)| (s - d as i64).pow(2))
            .sum()
    };
    let mut current = cost(&sum);
    for _ in 0..200_000 {
        let a = rng.random_range(0..counts.len());
        let b = rng.random_range(0..counts.len());
        let (ka, kb) = (owner[a], owner[b]);
        if ka == kb || counts[a] == counts[b] {
            continue;
        }
        let delta = counts[b] as i64 - counts[a] as i64;
        sum[ka] += delta;
        sum[kb] -= delta;
        let next = cost(&sum);
        if next <= current {
            current = next;
            owner.swap(a, b);
        } else {
            sum[ka] -= delta;
            sum[kb] += delta;
        }
    }
    let mut ranks = vec![Vec::new(); k];
    for (r, &o) in owner.iter().enumerate() {
        ranks[o].push(r);
    }
    ranks
}

fn build(rng: &mut ChaCha8Rng) -> Vec<Labeled> {
    let skel = skeletons(rng);
    let mut demand = vec![0usize; CLASSES.len()];
    for &k in skel.iter().flatten().flatten() {
        demand[k] += 1;
    }
    let sizes: Vec<usize> = CLASSES.iter().map(|c| c.items.len()).collect();
    let counts = zipf_counts(sizes.iter().sum(), demand.iter().sum());
    let ranks = assign_ranks(&counts, &sizes, &demand, rng);

    let mut pools: Vec<Vec<&'static str>> = Vec::new();
    for (k, class) in CLASSES.iter().enumerate() {
        let mut c: Vec<usize> = ranks[k].iter().map(|&r| counts[r]).collect();
        c.sort_unstable_by(|a, b| b.cmp(a));
        // the most frequent word absorbs what the rank assignment missed
        let missing = demand[k] as i64 - c.iter().sum::<usize>() as i64;
        c[0] = usize::try_from(c[0] as i64 + missing).expect("class total stays positive");
        let mut pool: Vec<&str> = class
            .items
            .iter()
            .zip(&c)
            .flat_map(|(&w, &n)| std::iter::repeat_n(w, n))
            .collect();
        pool.shuffle(rng);
        pools.push(pool);
    }

    let mut out = records();
    for sentence in &skel {
        let mut s = Labeled::new();
        for group in sentence {
            let label = CLASSES[group[0]].label;
            let words: Vec<&str> = group
                .iter()
                .map(|&k| pools[k].pop().expect("pool sized to demand"))
                .collect();
            span(&words.join(" "), label, &mut s);
        }
        out.push(s);
    }
    out.shuffle(rng);
    out
}

fn pos_lexicon() -> String {
    let mut lines: Vec<(String, &str)> = Vec::new();
    for c in CLASSES {
        lines.extend(c.items.iter().map(|w| (w.to_string(), c.tag)));
    }
    lines.extend(PLANTED_MATERIALS.iter().map(|m| (m.to_string(), "nz")));
    for e in PLANTED_EQUIPMENT {
        lines.extend(e.split(' ').map(|w| (w.to_string(), "n")));
    }
    lines.extend(RECORD_VERBS.iter().map(|w| (w.to_string(), "v")));
    lines.sort();
    lines.dedup();
    lines
        .into_iter()
        .map(|(w, t)| format!("{w}\t{t}\n"))
        .collect()
}

const RULES: &str = r#"[
  {"family": "pos-sequence", "body": "@material", "category": "MAT"},
  {"family": "pos-sequence", "body": "@equipment", "category": "EQU"}
]
"#;

const TRIGGERS: &str = r#"{
  "EQU": ["tank", "pump", "valve", "compressor", "reactor", "column", "pipeline", "exchanger", "separator", "drum", "furnace", "filter", "cooler", "vessel", "heater", "condenser", "boiler", "absorber", "incinerator"]
}
"#;

const CONFIG: &str = r#"{
  "corpus": "corpus.conll",
  "format": "conll-bio",
  "pos_lexicon": "pos_lexicon.tsv",
  "tagset": "chinese",
  "rules": "rules.json",
  "triggers": "triggers.json",
  "pipeline": {
    "law": "classical",
    "default_pos": "x",
    "generator": {"backend": "markov", "markov_order": 2, "orchestration": {"seed": 7}}
  }
}
"#;

fn main() {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/hazop"));
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let corpus = build(&mut rng);

    let table = build_frequency_table(corpus.iter().flatten().map(|(w, _)| w.as_str()));
    let fit = fit_classical(&table).expect("fixture table fits");
    assert!(
        fit.r_squared >= MIN_R2,
        "R² = {} below {MIN_R2}",
        fit.r_squared
    );

    let mut w = ConllWriter::new();
    for (n, s) in corpus.iter().enumerate() {
        w.push_sentence(
            s.iter().map(|(t, _)| t.as_str()),
            s.iter().map(|(_, l)| l.as_str()),
        );
        if (n + 1) % PER_DOCUMENT == 0 {
            w.end_document();
        }
    }
    fs::create_dir_all(&out).expect("create output directory");
    let write = |name: &str, text: &str| fs::write(out.join(name), text).expect("write fixture");
    write("corpus.conll", &w.finish());
    write("pos_lexicon.tsv", &pos_lexicon());
    write("rules.json", RULES);
    write("triggers.json", TRIGGERS);
    write("config.json", CONFIG);
    eprintln!(
        "{} sentences, {} tokens, {} types, alpha = {:.3}, R² = {:.5} -> {}",
        corpus.len(),
        table.total_tokens(),
        table.r_t(),
        fit.alpha,
        fit.r_squared,
        out.display()
    );
}
