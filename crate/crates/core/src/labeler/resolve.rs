//! Span resolution across rules and trigger-word verification.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use super::logic::Annotations;
use super::rules::CompiledRule;
use super::{Category, EntitySpan, TaggedToken};
use crate::error::{Error, Result};

/// Runs `rules` in list order. Overlapping spans of one category merge into
/// their union; a span overlapping an accepted span of another category is
/// dropped, so earlier rules win. Output is ordered by start.
pub fn apply_rules(
    rules: &[CompiledRule],
    tagged: &[TaggedToken],
    annotations: &Annotations,
) -> Vec<EntitySpan> {
    let mut accepted: Vec<(usize, usize, Category)> = Vec::new();
    for rule in rules {
        for span in rule.find(tagged, annotations) {
            let (mut s, mut e, cat) = (span.start, span.end, span.category);
            let clash = accepted
                .iter()
                .any(|&(a, b, c)| c != cat && a <= e && s <= b);
            if clash {
                continue;
            }
            accepted.retain(|&(a, b, c)| {
                let merge = c == cat && a <= e && s <= b;
                if merge {
                    s = s.min(a);
                    e = e.max(b);
                }
                !merge
            });
            accepted.push((s, e, cat));
        }
    }
    accepted.sort_unstable();
    let words: Vec<&str> = tagged.iter().map(|t| t.surface.as_str()).collect();
    accepted
        .into_iter()
        .map(|(s, e, c)| EntitySpan::over(&words, s, e, c))
        .collect()
}

/// Trigger words per category. Categories without words are not verified.
pub type TriggerLexicon = BTreeMap<Category, BTreeSet<String>>;

/// True iff the span surface contains a trigger word of its category
/// (case-insensitive substring), or the category has no trigger words.
pub fn verify_triggers(span: &EntitySpan, lexicon: &TriggerLexicon) -> bool {
    match lexicon.get(&span.category) {
        None => true,
        Some(words) if words.is_empty() => true,
        Some(words) => {
            let surface = span.surface.to_lowercase();
            words.iter().any(|w| surface.contains(&w.to_lowercase()))
        }
    }
}

/// Reads `{"EQU": ["tank", …], …}`.
pub fn load_triggers(path: &Path) -> Result<TriggerLexicon> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
