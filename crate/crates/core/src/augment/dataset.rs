use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ConllWriter, Corpus, SentenceId};
use crate::error::{Error, Result};
use crate::labeler::{is_well_formed, spans_from_bio, BioLabel, Category, EntitySpan, Granularity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Raw,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub id: SentenceId,
    pub tokens: Vec<String>,
    pub labels: Vec<BioLabel>,
    pub provenance: Provenance,
    /// Seed sentence of a generated sentence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SentenceId>,
}

impl LabeledSentence {
    pub fn new(
        id: SentenceId,
        tokens: Vec<String>,
        labels: Vec<BioLabel>,
        provenance: Provenance,
    ) -> Result<Self> {
        if tokens.len() != labels.len() {
            return Err(Error::Consistency(format!(
                "sentence {id}: {} tokens but {} labels",
                tokens.len(),
                labels.len()
            )));
        }
        if !is_well_formed(&labels) {
            return Err(Error::Consistency(format!(
                "sentence {id}: orphan I- label"
            )));
        }
        Ok(LabeledSentence {
            id,
            tokens,
            labels,
            provenance,
            source: None,
        })
    }

    pub fn spans(&self) -> Vec<EntitySpan> {
        spans_from_bio(&self.tokens, &self.labels).expect("validated on construction")
    }

    pub fn categories(&self) -> impl Iterator<Item = Category> + '_ {
        self.labels.iter().filter_map(|l| match l {
            BioLabel::B(c) => Some(*c),
            _ => None,
        })
    }
}

/// BIO-labeled sentences of one granularity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub granularity: Granularity,
    sentences: Vec<LabeledSentence>,
}

pub type CategoryCounts = BTreeMap<Category, usize>;

fn zero_counts() -> CategoryCounts {
    Category::ALL.into_iter().map(|c| (c, 0)).collect()
}

impl LabeledDataset {
    pub fn new(granularity: Granularity, sentences: Vec<LabeledSentence>) -> Self {
        LabeledDataset {
            granularity,
            sentences,
        }
    }

    /// Raw dataset from a labeled corpus; unlabeled sentences are all `O`.
    pub fn from_corpus(corpus: &Corpus, granularity: Granularity) -> Result<Self> {
        let sentences = corpus
            .sentences()
            .map(|s| {
                let labels = match &s.labels {
                    Some(raw) => raw
                        .iter()
                        .map(|l| l.parse())
                        .collect::<Result<Vec<BioLabel>>>()?,
                    None => vec![BioLabel::O; s.len()],
                };
                LabeledSentence::new(
                    s.id(),
                    s.surfaces().map(str::to_string).collect(),
                    labels,
                    Provenance::Raw,
                )
            })
            .collect::<Result<_>>()?;
        Ok(LabeledDataset::new(granularity, sentences))
    }

    pub fn sentences(&self) -> &[LabeledSentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Entity counts per category; every category is present.
    pub fn category_counts(&self) -> CategoryCounts {
        let mut counts = zero_counts();
        for c in self.sentences.iter().flat_map(LabeledSentence::categories) {
            *counts.entry(c).or_default() += 1;
        }
        counts
    }

    pub fn count_by_provenance(&self, p: Provenance) -> usize {
        self.sentences.iter().filter(|s| s.provenance == p).count()
    }

    pub fn entities(&self) -> impl Iterator<Item = EntitySpan> + '_ {
        self.sentences.iter().flat_map(LabeledSentence::spans)
    }

    /// conll-bio text; consecutive sentences of one document stay together.
    pub fn to_conll(&self) -> String {
        let mut w = ConllWriter::new();
        let mut doc: Option<&str> = None;
        for s in &self.sentences {
            if doc.is_some_and(|d| d != s.id.doc_id) {
                w.end_document();
            }
            doc = Some(&s.id.doc_id);
            let labels: Vec<String> = s.labels.iter().map(ToString::to_string).collect();
            w.push_sentence(
                s.tokens.iter().map(String::as_str),
                labels.iter().map(String::as_str),
            );
        }
        w.end_document();
        w.finish()
    }
}

/// `raw` followed by the generated sentences not already present (by token
/// sequence) in `raw` or earlier in `generated`.
pub fn merge(raw: &LabeledDataset, generated: &LabeledDataset) -> Result<LabeledDataset> {
    if !raw.is_empty() && !generated.is_empty() && raw.granularity != generated.granularity {
        return Err(Error::Invalid(format!(
            "cannot merge {:?}-level and {:?}-level datasets",
            raw.granularity, generated.granularity
        )));
    }
    let granularity = if raw.is_empty() {
        generated.granularity
    } else {
        raw.granularity
    };
    let mut seen: HashSet<&[String]> = raw.sentences.iter().map(|s| s.tokens.as_slice()).collect();
    let mut out = raw.sentences.clone();
    for s in &generated.sentences {
        if seen.insert(s.tokens.as_slice()) {
            out.push(s.clone());
        }
    }
    Ok(LabeledDataset::new(granularity, out))
}

/// Sizes by largest remainder; ties go to the earlier part.
fn apportion(n: usize, ratios: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let short = n - sizes.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        sizes[i] += 1;
    }
    sizes
}

/// Random train/test/validation split; each part keeps the input order.
pub fn split(
    dataset: &LabeledDataset,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    let r = [ratios.0, ratios.1, ratios.2];
    if r.iter().any(|x| !(x.is_finite() && *x > 0.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::Invalid(format!(
            "split ratios must be positive and sum to 1, got {ratios:?}"
        )));
    }
    let sizes = apportion(dataset.len(), &r);
    let mut idx: Vec<usize> = (0..dataset.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut parts = Vec::with_capacity(3);
    let mut at = 0;
    for size in sizes {
        let mut chosen = idx[at..at + size].to_vec();
        chosen.sort_unstable();
        at += size;
        parts.push(LabeledDataset::new(
            dataset.granularity,
            chosen
                .into_iter()
                .map(|i| dataset.sentences[i].clone())
                .collect(),
        ));
    }
    let val = parts.pop().expect("three parts");
    let test = parts.pop().expect("three parts");
    let train = parts.pop().expect("three parts");
    Ok((train, test, val))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleMode {
    /// Random over-sampling of sentences holding the target category.
    Ros,
    /// Random under-sampling of sentences holding only over-represented
    /// categories.
    Rus,
}

impl std::str::FromStr for ResampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ros" => Ok(ResampleMode::Ros),
            "rus" => Ok(ResampleMode::Rus),
            other => Err(Error::Invalid(format!("unknown resampling mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResampleReport {
    pub mode: ResampleMode,
    pub target: Category,
    pub before: CategoryCounts,
    pub after: CategoryCounts,
    pub added: usize,
    pub removed: usize,
    /// False when the balance goal could not be reached.
    pub achieved: bool,
}

/// Rebalances `dataset` around the `target` category. Best effort: the
/// report says whether the goal was reached.
pub fn resample(
    dataset: &LabeledDataset,
    mode: ResampleMode,
    target: Category,
    seed: u64,
) -> Result<(LabeledDataset, ResampleReport)> {
    let before = dataset.category_counts();
    if before[&target] == 0 {
        return Err(Error::Invalid(format!(
            "target category {target} has no entities"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target_count = |c: &CategoryCounts| c[&target];
    let (out, added, removed, achieved) = match mode {
        ResampleMode::Ros => {
            let goal = before.values().copied().max().unwrap_or(0);
            let pool: Vec<&LabeledSentence> = dataset
                .sentences
                .iter()
                .filter(|s| s.categories().any(|c| c == target))
                .collect();
            let mut out = dataset.sentences.clone();
            let mut count = target_count(&before);
            let mut added = 0;
            while count < goal {
                let pick = pool[rng.random_range(0..pool.len())];
                count += pick.categories().filter(|&c| c == target).count();
                out.push(pick.clone());
                added += 1;
            }
            (out, added, 0, true)
        }
        ResampleMode::Rus => {
            let limit = target_count(&before);
            let mut counts = before.clone();
            let mut keep = vec![true; dataset.len()];
            let mut removed = 0;
            loop {
                let over: Vec<Category> = counts
                    .iter()
                    .filter(|(_, &n)| n > limit)
                    .map(|(&c, _)| c)
                    .collect();
                if over.is_empty() {
                    break;
                }
                let candidates: Vec<usize> = (0..dataset.len())
                    .filter(|&i| keep[i])
                    .filter(|&i| {
                        let s = &dataset.sentences[i];
                        s.categories().next().is_some() && s.categories().all(|c| over.contains(&c))
                    })
                    .collect();
                if candidates.is_empty() {
                    break;
                }
                let i = candidates[rng.random_range(0..candidates.len())];
                keep[i] = false;
                removed += 1;
                for c in dataset.sentences[i].categories() {
                    *counts.get_mut(&c).expect("all categories present") -= 1;
                }
            }
            let achieved = counts.values().all(|&n| n <= limit);
            let out = dataset
                .sentences
                .iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(s, _)| s.clone())
                .collect();
            (out, 0, removed, achieved)
        }
    };
    let result = LabeledDataset::new(dataset.granularity, out);
    let report = ResampleReport {
        mode,
        target,
        before,
        after: result.category_counts(),
        added,
        removed,
        achieved,
    };
    Ok((result, report))
}
