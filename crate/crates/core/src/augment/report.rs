use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use crate::corpus::{build_frequency_table, FrequencyTable, Sentence};
use crate::labeler::entity_chunks;
use crate::zipffit::{fit_classical, progressive_exclusion, ClassicalFit, ExclusionCurve};

/// Entity-level frequency/rank analysis of a labeled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceReport {
    /// Entity mentions per category.
    pub category_counts: BTreeMap<String, usize>,
    pub total_entities: usize,
    /// Distinct entity surfaces.
    pub distinct_entities: usize,
    /// Distinct surfaces seen exactly once.
    pub frequency_one: usize,
    /// `frequency_one / distinct_entities`; 0 when there are no entities.
    pub frequency_one_share: f64,
    pub fit: Option<ClassicalFit>,
    /// Why `fit` is missing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    pub exclusion: ExclusionCurve,
    /// True when the dataset holds no entities.
    pub empty: bool,
    #[serde(skip)]
    pub table: FrequencyTable,
}

impl ImbalanceReport {
    /// Frequency table of entity surfaces.
    pub fn table(&self) -> &FrequencyTable {
        &self.table
    }
}

/// Report over `(category, surface)` mentions.
pub fn report_from_entities<I>(entities: I, exclusion_max: usize) -> ImbalanceReport
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut category_counts = BTreeMap::new();
    let mut surfaces = Vec::new();
    for (cat, surface) in entities {
        *category_counts.entry(cat).or_insert(0) += 1;
        surfaces.push(surface);
    }
    let table = build_frequency_table(surfaces.iter().map(String::as_str));
    let frequency_one = table.entries().iter().filter(|e| e.frequency == 1).count();
    let distinct = table.r_t();
    let (fit, fit_error) = match fit_classical(&table) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let exclusion = if distinct > 0 {
        progressive_exclusion(&table, exclusion_max)
    } else {
        ExclusionCurve::default()
    };
    ImbalanceReport {
        category_counts,
        total_entities: surfaces.len(),
        distinct_entities: distinct,
        frequency_one,
        frequency_one_share: if distinct == 0 {
            0.0
        } else {
            frequency_one as f64 / distinct as f64
        },
        fit,
        fit_error,
        exclusion,
        empty: surfaces.is_empty(),
        table,
    }
}

/// Default depth of the progressive-exclusion curve.
pub const EXCLUSION_MAX: usize = 40;

pub fn imbalance_report(dataset: &LabeledDataset) -> ImbalanceReport {
    report_from_entities(
        dataset
            .entities()
            .map(|s| (s.category.to_string(), s.surface)),
        EXCLUSION_MAX,
    )
}

/// Report over raw tag columns in BIO, BIOES or BMES form with any category
/// names; for externally labeled datasets.
pub fn imbalance_report_from_tags<'a, I>(sentences: I, exclusion_max: usize) -> ImbalanceReport
where
    I: IntoIterator<Item = &'a Sentence>,
{
    let mut mentions = Vec::new();
    for s in sentences {
        let Some(tags) = &s.labels else { continue };
        let words: Vec<&str> = s.surfaces().collect();
        for (cat, a, b) in entity_chunks(tags) {
            mentions.push((cat, words[a..=b].join(" ")));
        }
    }
    report_from_entities(mentions, exclusion_max)
}
