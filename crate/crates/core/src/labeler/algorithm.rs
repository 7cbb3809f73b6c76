//! Built-in material and equipment rules over Chinese-style POS tags.
//!
//! Materials: every maximal run of `nz` tokens. Equipment: every maximal
//! block of noun units; the block keeps its last noun only when a quantifier
//! follows it, and a directly preceding adjective is prepended.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{surfaces, unit_ranges, Category, EntitySpan, TaggedToken};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgorithmConfig {
    pub material_tags: BTreeSet<String>,
    /// Tags that may form an equipment noun block. Idioms count as nouns.
    pub noun_tags: BTreeSet<String>,
    pub adjective_tags: BTreeSet<String>,
    pub quantifier_tags: BTreeSet<String>,
    /// Extend equipment spans over the trailing quantifier.
    pub include_quantifier: bool,
}

fn set(tags: &[&str]) -> BTreeSet<String> {
    tags.iter().map(|t| t.to_string()).collect()
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            material_tags: set(&["nz"]),
            noun_tags: set(&["n", "ng", "nr", "ns", "nt", "i"]),
            adjective_tags: set(&["a"]),
            quantifier_tags: set(&["q", "mq"]),
            include_quantifier: false,
        }
    }
}

/// A maximal run of noun units with its neighbours. Ranges are inclusive
/// token indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NounBlock {
    pub nouns: Vec<(usize, usize)>,
    pub adjective: Option<(usize, usize)>,
    pub quantifier: Option<(usize, usize)>,
}

impl NounBlock {
    pub fn start(&self) -> usize {
        self.nouns[0].0
    }

    pub fn end(&self) -> usize {
        self.nouns[self.nouns.len() - 1].1
    }
}

pub fn noun_blocks(tagged: &[TaggedToken], config: &AlgorithmConfig) -> Vec<NounBlock> {
    let units = unit_ranges(tagged);
    let tag = |u: usize| tagged[units[u].0].pos.as_str();
    let mut blocks = Vec::new();
    let mut u = 0;
    while u < units.len() {
        if !config.noun_tags.contains(tag(u)) {
            u += 1;
            continue;
        }
        let first = u;
        while u < units.len() && config.noun_tags.contains(tag(u)) {
            u += 1;
        }
        let adjective =
            (first > 0 && config.adjective_tags.contains(tag(first - 1))).then(|| units[first - 1]);
        let quantifier =
            (u < units.len() && config.quantifier_tags.contains(tag(u))).then(|| units[u]);
        blocks.push(NounBlock {
            nouns: units[first..u].to_vec(),
            adjective,
            quantifier,
        });
    }
    blocks
}

pub fn label_materials(tagged: &[TaggedToken], config: &AlgorithmConfig) -> Vec<EntitySpan> {
    let words = surfaces(tagged);
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tagged.len() {
        if !config.material_tags.contains(&tagged[i].pos) {
            i += 1;
            continue;
        }
        let start = i;
        while i < tagged.len() && config.material_tags.contains(&tagged[i].pos) {
            i += 1;
        }
        spans.push(EntitySpan::over(&words, start, i - 1, Category::MAT));
    }
    spans
}

pub fn label_equipment(tagged: &[TaggedToken], config: &AlgorithmConfig) -> Vec<EntitySpan> {
    let words = surfaces(tagged);
    noun_blocks(tagged, config)
        .into_iter()
        .filter_map(|mut block| {
            if block.quantifier.is_none() {
                block.nouns.pop();
            }
            if block.nouns.is_empty() {
                return None;
            }
            let start = block.adjective.map_or(block.start(), |a| a.0);
            let end = match block.quantifier {
                Some(q) if config.include_quantifier => q.1,
                _ => block.end(),
            };
            Some(EntitySpan::over(&words, start, end, Category::EQU))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Tokens from `(surface, tag)` units; multiword surfaces share a unit.
    fn tagged(units: &[(&str, &str)]) -> Vec<TaggedToken> {
        units
            .iter()
            .enumerate()
            .flat_map(|(u, (s, pos))| {
                s.split_whitespace().map(move |w| TaggedToken {
                    surface: w.to_string(),
                    pos: pos.to_string(),
                    unit: u,
                })
            })
            .collect()
    }

    fn cfg() -> AlgorithmConfig {
        AlgorithmConfig::default()
    }

    #[test]
    fn table_row_one_equipment() {
        let t = tagged(&[
            ("high", "a"),
            ("alarm", "n"),
            ("sulfur generation", "n"),
            ("waste heat", "n"),
            ("boiler", "n"),
            ("liquid level", "n"),
            ("too", "ug"),
            ("low", "a"),
        ]);
        let spans = label_equipment(&t, &cfg());
        assert_eq!(spans.len(), 1);
        assert_eq!(
            spans[0].surface,
            "high alarm sulfur generation waste heat boiler"
        );
        assert_eq!((spans[0].start, spans[0].end), (0, 6));
        assert!(label_materials(&t, &cfg()).is_empty());
    }

    #[test]
    fn table_row_two_materials() {
        let t = tagged(&[
            ("vinyl chloride", "nz"),
            (",", "x"),
            ("hydrogen sulfide", "n"),
            ("and", "c"),
            ("sulfur dioxide", "nz"),
            ("exceed the standard", "v"),
        ]);
        let got: Vec<String> = label_materials(&t, &cfg())
            .into_iter()
            .map(|s| s.surface)
            .collect();
        assert_eq!(got, ["vinyl chloride", "sulfur dioxide"]);
        // single noun unit followed by a conjunction shrinks to nothing
        assert!(label_equipment(&t, &cfg()).is_empty());
    }

    #[test]
    fn quantifier_keeps_the_last_noun() {
        let t = tagged(&[("pump", "n"), ("two", "q"), ("leaks", "v")]);
        let spans = label_equipment(&t, &cfg());
        assert_eq!(spans, [EntitySpan::over(&["pump"], 0, 0, Category::EQU)]);

        let with_q = AlgorithmConfig {
            include_quantifier: true,
            ..cfg()
        };
        assert_eq!(label_equipment(&t, &with_q)[0].surface, "pump two");
    }

    #[test]
    fn adjective_only_prepends_to_non_empty_blocks() {
        let t = tagged(&[("hot", "a"), ("tank", "n"), ("leaks", "v")]);
        assert!(label_equipment(&t, &cfg()).is_empty());
        let t = tagged(&[("hot", "a"), ("feed", "n"), ("tank", "n"), ("at", "p")]);
        assert_eq!(label_equipment(&t, &cfg())[0].surface, "hot feed");
    }

    #[test]
    fn idioms_join_noun_blocks() {
        let t = tagged(&[
            ("tank", "n"),
            ("catch fire", "i"),
            ("valve", "n"),
            ("x", "x"),
        ]);
        let blocks = noun_blocks(&t, &cfg());
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].nouns.len(), 3);
    }

    #[test]
    fn no_nouns_no_spans() {
        let t = tagged(&[("is", "v"), ("low", "a")]);
        assert!(label_equipment(&t, &cfg()).is_empty());
        assert!(label_materials(&t, &cfg()).is_empty());
        let one = tagged(&[("benzene", "nz")]);
        assert_eq!(label_materials(&one, &cfg()).len(), 1);
    }

    #[test]
    fn materials_are_maximal() {
        let t = tagged(&[("a", "nz"), ("b", "nz"), ("c", "n"), ("d", "nz")]);
        let spans = label_materials(&t, &cfg());
        assert_eq!(spans.len(), 2);
        assert_eq!((spans[0].start, spans[0].end, spans[1].start), (0, 1, 3));
    }
}
