//! Rule-driven entity labeling of generated sentences.
//!
//! Sentences are POS-tagged, matched against compiled rules (including the
//! built-in material and equipment rules), resolved into non-overlapping
//! spans, verified against trigger lexicons and emitted as BIO records.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub mod algorithm;
pub mod bio;
mod keyword;
mod layout;
mod logic;
pub mod pos;
pub mod resolve;
pub mod rules;

pub use algorithm::{label_equipment, label_materials, noun_blocks, AlgorithmConfig, NounBlock};
pub use bio::{
    emit_bio, entity_chunks, is_well_formed, spans_from_bio, BioLabel, BioRecord, Granularity,
};
pub use keyword::Binding;
pub use logic::{Annotations, DepArc, Fact, FactArg};
pub use pos::{
    load_pos_lexicon, parse_pos_lexicon, pos_tag, LexiconTagger, PosLexicon, PosTagger,
    RemoteTagger, Tagset,
};
pub use resolve::{apply_rules, load_triggers, verify_triggers, TriggerLexicon};
pub use rules::{
    compile_rule, compile_rule_with, load_rules, load_rules_with, parse_rules, parse_rules_with,
    CompiledRule, RuleFamily, RuleSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    /// Equipment.
    EQU,
    /// Material.
    MAT,
    /// Consequence.
    CON,
    /// State.
    STA,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::EQU, Category::MAT, Category::CON, Category::STA];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::EQU => "EQU",
            Category::MAT => "MAT",
            Category::CON => "CON",
            Category::STA => "STA",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown entity category {s:?}")))
    }
}

/// A token with its part-of-speech tag. Tokens covered by one multiword
/// lexicon entry share a `unit` id; units are numbered from 0 in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub surface: String,
    pub pos: String,
    pub unit: usize,
}

/// Inclusive token range `start..=end` labeled with a category.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub category: Category,
}

impl EntitySpan {
    /// Builds a span over `tokens[start..=end]`; panics if out of range.
    pub fn over<S: AsRef<str>>(tokens: &[S], start: usize, end: usize, category: Category) -> Self {
        let surface = tokens[start..=end]
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(" ");
        EntitySpan {
            start,
            end,
            surface,
            category,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// Surfaces of a tagged sentence.
pub(crate) fn surfaces(tagged: &[TaggedToken]) -> Vec<&str> {
    tagged.iter().map(|t| t.surface.as_str()).collect()
}

/// Token index ranges of each unit, in order.
pub(crate) fn unit_ranges(tagged: &[TaggedToken]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (i, t) in tagged.iter().enumerate() {
        match out.last_mut() {
            Some(last) if tagged[last.0].unit == t.unit => last.1 = i,
            _ => out.push((i, i)),
        }
    }
    out
}
