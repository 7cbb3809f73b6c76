use serde::{Deserialize, Serialize};

use crate::classify::{classify_words, partition_sentences};
use crate::corpus::{Corpus, Sentence};
use crate::error::Result;
use crate::genbridge::planned_counts;
use crate::zipffit::SplitPoint;

pub const SWEEP_FORMULA: &str =
    "p < 0: r0' = r0 - round(|p|/100 * (r0 - 1)); p > 0: r0' = r0 + round(p/100 * (r_t - r0)); |p| >= 100 is infeasible";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Signed percentage.
    pub offset: i32,
    pub label: String,
    pub r0: Option<usize>,
    pub feasible: bool,
    pub n_common: usize,
    pub n_rare: usize,
    pub n_inductive: usize,
    pub n_expanded: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub base_r0: usize,
    pub r_t: usize,
    pub formula: String,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("offset,label,r0,feasible,n_common,n_rare,n_inductive,n_expanded\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.offset,
                r.label,
                r.r0.map_or(String::new(), |v| v.to_string()),
                r.feasible,
                r.n_common,
                r.n_rare,
                r.n_inductive,
                r.n_expanded
            ));
        }
        out
    }
}

pub fn offset_label(offset: i32) -> String {
    match offset {
        0 => "0%".into(),
        p if p > 0 => format!("+{p}%"),
        p => format!("{p}%"),
    }
}

/// Moves `r0` by `offset` percent of the rank span on that side of it.
pub fn shifted_r0(r0: usize, r_t: usize, offset: i32) -> Option<usize> {
    if offset.unsigned_abs() >= 100 || r0 < 1 || r0 > r_t {
        return None;
    }
    let frac = f64::from(offset.unsigned_abs()) / 100.0;
    let shifted = if offset < 0 {
        r0 - (frac * (r0 - 1) as f64).round() as usize
    } else {
        r0 + (frac * (r_t - r0) as f64).round() as usize
    };
    (1..=r_t).contains(&shifted).then_some(shifted)
}

/// Re-partitions the corpus at each shifted split point and records the
/// generation counts it would produce. No text is generated.
pub fn r0_sweep(corpus: &Corpus, base: SplitPoint, offsets: &[i32]) -> Result<SweepReport> {
    let table = corpus.word_table();
    let r_t = table.r_t();
    let sentences: Vec<Sentence> = corpus.sentences().cloned().collect();
    // validates the base split point
    classify_words(&table, base)?;
    let mut rows = Vec::with_capacity(offsets.len());
    for &offset in offsets {
        let mut row = SweepRow {
            offset,
            label: offset_label(offset),
            r0: None,
            feasible: false,
            n_common: 0,
            n_rare: 0,
            n_inductive: 0,
            n_expanded: 0,
        };
        if let Some(r0) = shifted_r0(base.r0, r_t, offset) {
            let map = classify_words(&table, SplitPoint::manual(r0))?;
            let part = partition_sentences(&sentences, &map);
            let counts = planned_counts(part.common_sentences.len(), part.rare_sentences.len());
            row = SweepRow {
                r0: Some(r0),
                feasible: true,
                n_common: part.common_sentences.len(),
                n_rare: part.rare_sentences.len(),
                n_inductive: counts.n_inductive,
                n_expanded: counts.n_expanded,
                ..row
            };
        }
        rows.push(row);
    }
    Ok(SweepReport {
        base_r0: base.r0,
        r_t,
        formula: SWEEP_FORMULA.into(),
        rows,
    })
}
