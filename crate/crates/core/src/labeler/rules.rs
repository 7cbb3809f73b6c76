//! Rule specifications and their compiled matchers.
//!
//! Rule files are JSON arrays of
//! `{"family", "body", "category", "priority", "capture"?}`. A lower priority
//! number runs first; ties keep file order.
//!
//! POS-sequence bodies list one tag expression per unit, separated by
//! commas: `{NNP∪NN, VBN, IN, NNP}`. Alternatives use `∪` or `|`; a trailing
//! `+` repeats a position and `?` makes it optional. The bodies `@material`
//! and `@equipment` select the built-in noun-block rules.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::algorithm::{label_equipment, label_materials, AlgorithmConfig};
use super::keyword::{Binding, KeywordPattern};
use super::layout::LayoutTemplate;
use super::logic::{Annotations, DependencyRule, HornRule};
use super::{surfaces, unit_ranges, Category, EntitySpan, TaggedToken};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleFamily {
    PosSequence,
    #[serde(alias = "regex")]
    RegularExpression,
    #[serde(alias = "keyword")]
    KeywordPattern,
    #[serde(alias = "dependency")]
    DependencyConstraint,
    #[serde(alias = "horn")]
    HornRule,
    #[serde(alias = "layout")]
    LayoutTemplate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSpec {
    pub family: RuleFamily,
    pub body: String,
    pub category: Category,
    #[serde(default)]
    pub priority: i64,
    /// Capture or slot name to label instead of the whole match
    /// (keyword and layout families only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture: Option<String>,
}

impl RuleSpec {
    pub fn new(family: RuleFamily, body: impl Into<String>, category: Category) -> Self {
        RuleSpec {
            family,
            body: body.into(),
            category,
            priority: 0,
            capture: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Quant {
    One,
    Plus,
    Optional,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PosElem {
    tags: BTreeSet<String>,
    quant: Quant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PosPattern {
    elems: Vec<PosElem>,
}

fn grammar(position: usize, message: impl Into<String>) -> Error {
    Error::Grammar {
        position,
        message: message.into(),
    }
}

impl PosPattern {
    fn parse(body: &str) -> Result<Self> {
        let t = body.trim();
        let base = body.len() - body.trim_start().len();
        if t.is_empty() {
            return Err(grammar(0, "empty POS sequence"));
        }
        let (inner, base) = match t.strip_prefix('{') {
            Some(rest) => (
                rest.strip_suffix('}')
                    .ok_or_else(|| grammar(base, "unclosed '{'"))?,
                base + 1,
            ),
            None => (t, base),
        };
        let mut elems = Vec::new();
        let mut offset = base;
        for part in inner.split(',') {
            let at = offset + part.len() - part.trim_start().len();
            offset += part.len() + 1;
            let mut p = part.trim();
            let quant = if let Some(r) = p.strip_suffix('+') {
                p = r;
                Quant::Plus
            } else if let Some(r) = p.strip_suffix('?') {
                p = r;
                Quant::Optional
            } else {
                Quant::One
            };
            let tags: BTreeSet<String> = p
                .split(['∪', '|'])
                .map(str::trim)
                .map(|s| {
                    if s.is_empty() || s.contains(char::is_whitespace) {
                        Err(grammar(at, "empty or malformed tag in POS sequence"))
                    } else {
                        Ok(s.to_string())
                    }
                })
                .collect::<Result<_>>()?;
            elems.push(PosElem { tags, quant });
        }
        if elems.iter().all(|e| e.quant == Quant::Optional) {
            return Err(grammar(base, "POS sequence can match nothing"));
        }
        Ok(PosPattern { elems })
    }

    /// End unit (exclusive) of the longest match of elems[k..] from unit `u`.
    fn step(&self, tags: &[&str], k: usize, u: usize) -> Option<usize> {
        let Some(e) = self.elems.get(k) else {
            return Some(u);
        };
        let hit = |i: usize| i < tags.len() && e.tags.contains(tags[i]);
        match e.quant {
            Quant::One => hit(u).then(|| self.step(tags, k + 1, u + 1)).flatten(),
            Quant::Optional => hit(u)
                .then(|| self.step(tags, k + 1, u + 1))
                .flatten()
                .or_else(|| self.step(tags, k + 1, u)),
            Quant::Plus => {
                let mut run = u;
                while hit(run) {
                    run += 1;
                }
                (u + 1..=run)
                    .rev()
                    .find_map(|end| self.step(tags, k + 1, end))
            }
        }
    }

    /// Non-overlapping unit ranges `[start, end)`, leftmost first.
    fn find(&self, tags: &[&str]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut u = 0;
        while u < tags.len() {
            match self.step(tags, 0, u) {
                Some(end) if end > u => {
                    out.push((u, end));
                    u = end;
                }
                _ => u += 1,
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Matcher {
    Pos(PosPattern),
    Material(AlgorithmConfig),
    Equipment(AlgorithmConfig),
    Regex(Regex),
    Keyword(KeywordPattern),
    Layout(LayoutTemplate),
    Dependency(DependencyRule),
    Horn(HornRule),
}

/// Immutable matcher; shareable across threads.
#[derive(Debug, Clone)]
pub struct CompiledRule {
    spec: RuleSpec,
    matcher: Matcher,
}

pub fn compile_rule(spec: &RuleSpec) -> Result<CompiledRule> {
    compile_rule_with(spec, &AlgorithmConfig::default())
}

/// Like [`compile_rule`], with explicit settings for the built-in rules.
pub fn compile_rule_with(spec: &RuleSpec, config: &AlgorithmConfig) -> Result<CompiledRule> {
    if spec.body.trim().is_empty() {
        return Err(grammar(0, "empty rule body"));
    }
    let matcher = match spec.family {
        RuleFamily::PosSequence => match spec.body.trim() {
            "@material" => Matcher::Material(config.clone()),
            "@equipment" => Matcher::Equipment(config.clone()),
            b if b.starts_with('@') => {
                return Err(grammar(0, format!("unknown built-in rule {b}")))
            }
            _ => Matcher::Pos(PosPattern::parse(&spec.body)?),
        },
        RuleFamily::RegularExpression => {
            Matcher::Regex(Regex::new(&spec.body).map_err(|e| grammar(0, e.to_string()))?)
        }
        RuleFamily::KeywordPattern => Matcher::Keyword(KeywordPattern::parse(&spec.body)?),
        RuleFamily::LayoutTemplate => Matcher::Layout(LayoutTemplate::parse(&spec.body)?),
        RuleFamily::DependencyConstraint => Matcher::Dependency(DependencyRule::parse(&spec.body)?),
        RuleFamily::HornRule => Matcher::Horn(HornRule::parse(&spec.body)?),
    };
    if let Some(name) = &spec.capture {
        let known = match &matcher {
            Matcher::Keyword(k) => k.capture_names().any(|n| n == name),
            Matcher::Layout(_) => spec.body.contains(&format!("[{name}]")),
            _ => {
                return Err(Error::Invalid(format!(
                    "capture {name:?} is only supported by keyword and layout rules"
                )))
            }
        };
        if !known {
            return Err(grammar(
                0,
                format!("capture {name:?} does not occur in the rule body"),
            ));
        }
    }
    Ok(CompiledRule {
        spec: spec.clone(),
        matcher,
    })
}

impl CompiledRule {
    pub fn spec(&self) -> &RuleSpec {
        &self.spec
    }

    pub fn category(&self) -> Category {
        self.spec.category
    }

    pub fn builtin_material() -> Self {
        compile_rule(&RuleSpec::new(
            RuleFamily::PosSequence,
            "@material",
            Category::MAT,
        ))
        .expect("built-in rule")
    }

    pub fn builtin_equipment() -> Self {
        compile_rule(&RuleSpec::new(
            RuleFamily::PosSequence,
            "@equipment",
            Category::EQU,
        ))
        .expect("built-in rule")
    }

    /// Capture bindings of keyword and layout rules; empty for other families.
    pub fn bindings(&self, tagged: &[TaggedToken]) -> Vec<Vec<Binding>> {
        let words = surfaces(tagged);
        match &self.matcher {
            Matcher::Keyword(k) => k.find_all(&words).into_iter().map(|m| m.bindings).collect(),
            Matcher::Layout(l) => l.bind(&words).into_iter().collect(),
            _ => Vec::new(),
        }
    }

    fn spans_from_groups(
        &self,
        words: &[&str],
        groups: Vec<(usize, usize, Vec<Binding>)>,
    ) -> Vec<EntitySpan> {
        let cat = self.spec.category;
        match &self.spec.capture {
            Some(name) => groups
                .into_iter()
                .flat_map(|(_, _, b)| b)
                .filter(|b| &b.name == name)
                .map(|b| EntitySpan::over(words, b.start, b.end, cat))
                .collect(),
            None => groups
                .into_iter()
                .map(|(s, e, _)| EntitySpan::over(words, s, e, cat))
                .collect(),
        }
    }

    /// All spans this rule proposes for one tagged sentence, in order.
    pub fn find(&self, tagged: &[TaggedToken], annotations: &Annotations) -> Vec<EntitySpan> {
        let words = surfaces(tagged);
        let cat = self.spec.category;
        let span = |s: usize, e: usize| EntitySpan::over(&words, s, e, cat);
        match &self.matcher {
            Matcher::Material(c) => retag(label_materials(tagged, c), cat),
            Matcher::Equipment(c) => retag(label_equipment(tagged, c), cat),
            Matcher::Pos(p) => {
                let units = unit_ranges(tagged);
                let tags: Vec<&str> = units.iter().map(|&(s, _)| tagged[s].pos.as_str()).collect();
                p.find(&tags)
                    .into_iter()
                    .map(|(a, b)| span(units[a].0, units[b - 1].1))
                    .collect()
            }
            Matcher::Regex(re) => {
                let text = words.join(" ");
                let mut starts = Vec::with_capacity(words.len());
                let mut at = 0;
                for w in &words {
                    starts.push(at);
                    at += w.len() + 1;
                }
                re.find_iter(&text)
                    .filter(|m| !m.is_empty())
                    .map(|m| {
                        let first = starts.partition_point(|&s| s <= m.start()) - 1;
                        let last = starts.partition_point(|&s| s < m.end()) - 1;
                        span(first, last)
                    })
                    .collect()
            }
            Matcher::Keyword(k) => {
                let groups = k
                    .find_all(&words)
                    .into_iter()
                    .filter(|m| m.end > m.start)
                    .map(|m| (m.start, m.end - 1, m.bindings))
                    .collect();
                self.spans_from_groups(&words, groups)
            }
            Matcher::Layout(l) => {
                let groups = l
                    .bind(&words)
                    .map(|b| (b[0].start, b[b.len() - 1].end, b))
                    .into_iter()
                    .collect();
                self.spans_from_groups(&words, groups)
            }
            Matcher::Dependency(d) => d
                .find(words.len(), &annotations.arcs)
                .into_iter()
                .map(|(s, e)| span(s, e))
                .collect(),
            Matcher::Horn(h) => h
                .find(&words, &annotations.facts)
                .into_iter()
                .map(|(s, e)| span(s, e))
                .collect(),
        }
    }
}

fn retag(spans: Vec<EntitySpan>, category: Category) -> Vec<EntitySpan> {
    spans
        .into_iter()
        .map(|s| EntitySpan { category, ..s })
        .collect()
}

/// Compiles a JSON rule list and orders it by priority (stable).
pub fn parse_rules(json: &str) -> Result<Vec<CompiledRule>> {
    parse_rules_with(json, &AlgorithmConfig::default())
}

pub fn parse_rules_with(json: &str, config: &AlgorithmConfig) -> Result<Vec<CompiledRule>> {
    let specs: Vec<RuleSpec> = serde_json::from_str(json)?;
    let mut rules = specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            compile_rule_with(s, config).map_err(|e| match e {
                Error::Grammar { position, message } => Error::Grammar {
                    position,
                    message: format!("rule {i}: {message}"),
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rules.sort_by_key(|r| r.spec.priority);
    Ok(rules)
}

pub fn load_rules(path: &Path) -> Result<Vec<CompiledRule>> {
    load_rules_with(path, &AlgorithmConfig::default())
}

pub fn load_rules_with(path: &Path, config: &AlgorithmConfig) -> Result<Vec<CompiledRule>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rules_with(&text, config)
}
