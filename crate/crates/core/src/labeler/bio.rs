//! BIO emission and span extraction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Category, EntitySpan};
use crate::corpus::Sentence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BioLabel {
    O,
    B(Category),
    I(Category),
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioLabel::O => f.write_str("O"),
            BioLabel::B(c) => write!(f, "B-{c}"),
            BioLabel::I(c) => write!(f, "I-{c}"),
        }
    }
}

impl FromStr for BioLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(BioLabel::O);
        }
        match s.split_once('-') {
            Some(("B", c)) => Ok(BioLabel::B(c.parse()?)),
            Some(("I", c)) => Ok(BioLabel::I(c.parse()?)),
            _ => Err(Error::Invalid(format!("not a BIO label: {s:?}"))),
        }
    }
}

impl Serialize for BioLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BioRecord {
    pub surface: String,
    pub label: BioLabel,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[default]
    Word,
    /// One record per character of each token.
    Character,
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(Granularity::Word),
            "character" | "char" => Ok(Granularity::Character),
            other => Err(Error::Invalid(format!("unknown granularity {other:?}"))),
        }
    }
}

/// Labels every token (or character) of `sentence`. Spans must be in range
/// and pairwise disjoint.
pub fn emit_bio(
    sentence: &Sentence,
    spans: &[EntitySpan],
    granularity: Granularity,
) -> Result<Vec<BioRecord>> {
    let n = sentence.len();
    let mut labels = vec![BioLabel::O; n];
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (k, span) in spans.iter().enumerate() {
        if span.start > span.end || span.end >= n {
            return Err(Error::Consistency(format!(
                "span {}..={} out of range for a {n}-token sentence",
                span.start, span.end
            )));
        }
        for i in span.start..=span.end {
            if let Some(j) = owner[i] {
                return Err(Error::Consistency(format!(
                    "spans {:?} and {:?} overlap at token {i}",
                    spans[j].surface, span.surface
                )));
            }
            owner[i] = Some(k);
            labels[i] = if i == span.start {
                BioLabel::B(span.category)
            } else {
                BioLabel::I(span.category)
            };
        }
    }
    let mut out = Vec::with_capacity(n);
    for (tok, label) in sentence.tokens.iter().zip(labels) {
        match granularity {
            Granularity::Word => out.push(BioRecord {
                surface: tok.surface.clone(),
                label,
            }),
            Granularity::Character => {
                for (j, ch) in tok.surface.chars().enumerate() {
                    let label = match label {
                        BioLabel::B(c) if j > 0 => BioLabel::I(c),
                        l => l,
                    };
                    out.push(BioRecord {
                        surface: ch.to_string(),
                        label,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// No `I-X` unless the previous label is `B-X` or `I-X`.
pub fn is_well_formed(labels: &[BioLabel]) -> bool {
    labels.iter().enumerate().all(|(i, l)| match l {
        BioLabel::I(c) => {
            i > 0 && matches!(labels[i - 1], BioLabel::B(p) | BioLabel::I(p) if p == *c)
        }
        _ => true,
    })
}

/// Spans encoded by a well-formed BIO sequence.
pub fn spans_from_bio<S: AsRef<str>>(tokens: &[S], labels: &[BioLabel]) -> Result<Vec<EntitySpan>> {
    if tokens.len() != labels.len() {
        return Err(Error::Consistency(format!(
            "{} tokens but {} labels",
            tokens.len(),
            labels.len()
        )));
    }
    if !is_well_formed(labels) {
        return Err(Error::Consistency("orphan I- label".into()));
    }
    let mut spans = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        let BioLabel::B(c) = labels[i] else {
            i += 1;
            continue;
        };
        let start = i;
        i += 1;
        while i < labels.len() && labels[i] == BioLabel::I(c) {
            i += 1;
        }
        spans.push(EntitySpan::over(tokens, start, i - 1, c));
    }
    Ok(spans)
}

/// Lenient chunk extraction over raw tag strings in BIO, BIOES or BMES form
/// with arbitrary category names: `(category, start, end)` inclusive.
pub fn entity_chunks<S: AsRef<str>>(tags: &[S]) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut open: Option<(String, usize)> = None;
    for (i, tag) in tags.iter().enumerate() {
        let tag = tag.as_ref();
        let (prefix, cat) = match tag.split_once(['-', '_']) {
            Some((p, c)) if p.len() == 1 => (p, c),
            _ => ("O", ""),
        };
        let continues = matches!(&open, Some((c, _)) if c == cat);
        match prefix {
            "B" | "S" => {
                if let Some((c, s)) = open.take() {
                    out.push((c, s, i - 1));
                }
                if prefix == "S" {
                    out.push((cat.to_string(), i, i));
                } else {
                    open = Some((cat.to_string(), i));
                }
            }
            "I" | "M" | "E" => {
                if !continues {
                    if let Some((c, s)) = open.take() {
                        out.push((c, s, i - 1));
                    }
                    open = Some((cat.to_string(), i));
                }
                if prefix == "E" {
                    let (c, s) = open.take().expect("chunk is open");
                    out.push((c, s, i));
                }
            }
            _ => {
                if let Some((c, s)) = open.take() {
                    out.push((c, s, i - 1));
                }
            }
        }
    }
    if let Some((c, s)) = open {
        out.push((c, s, tags.len() - 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(s: &str) -> Vec<BioLabel> {
        s.split_whitespace().map(|l| l.parse().unwrap()).collect()
    }

    #[test]
    fn no_spans_all_outside() {
        let s = Sentence::from_text("d", 0, "a b c");
        let recs = emit_bio(&s, &[], Granularity::Word).unwrap();
        assert!(recs.iter().all(|r| r.label == BioLabel::O));
    }

    #[test]
    fn overlapping_spans_are_an_internal_error() {
        let s = Sentence::from_text("d", 0, "a b c");
        let w = ["a", "b", "c"];
        let spans = [
            EntitySpan::over(&w, 0, 1, Category::EQU),
            EntitySpan::over(&w, 1, 2, Category::MAT),
        ];
        assert!(matches!(
            emit_bio(&s, &spans, Granularity::Word),
            Err(Error::Consistency(_))
        ));
        let far = EntitySpan {
            start: 2,
            end: 3,
            surface: "c".into(),
            category: Category::MAT,
        };
        assert!(emit_bio(&s, &[far], Granularity::Word).is_err());
    }

    #[test]
    fn character_mode() {
        let s = Sentence::new("d", 0, ["泵体", "泄漏"]);
        let spans = [EntitySpan::over(&["泵体", "泄漏"], 0, 0, Category::EQU)];
        let recs = emit_bio(&s, &spans, Granularity::Character).unwrap();
        let got: Vec<String> = recs
            .iter()
            .map(|r| format!("{} {}", r.surface, r.label))
            .collect();
        assert_eq!(got, ["泵 B-EQU", "体 I-EQU", "泄 O", "漏 O"]);
    }

    #[test]
    fn well_formedness() {
        assert!(is_well_formed(&labels("O B-EQU I-EQU O B-MAT")));
        assert!(!is_well_formed(&labels("I-EQU")));
        assert!(!is_well_formed(&labels("B-MAT I-EQU")));
        assert!(!is_well_formed(&labels("O I-CON")));
        assert!("X-EQU".parse::<BioLabel>().is_err());
        assert!("B-FOO".parse::<BioLabel>().is_err());
    }

    #[test]
    fn chunks_in_several_schemes() {
        let bmes = ["B-NAME", "M-NAME", "E-NAME", "O", "S-ORG", "B-ORG", "E-ORG"];
        assert_eq!(
            entity_chunks(&bmes),
            [
                ("NAME".to_string(), 0, 2),
                ("ORG".into(), 4, 4),
                ("ORG".into(), 5, 6)
            ]
        );
        let bio = ["B-EQU", "I-EQU", "B-EQU", "O", "I-MAT"];
        assert_eq!(
            entity_chunks(&bio),
            [
                ("EQU".to_string(), 0, 1),
                ("EQU".into(), 2, 2),
                ("MAT".into(), 4, 4)
            ]
        );
    }

    fn arb_spans() -> impl Strategy<Value = (usize, Vec<(usize, usize, Category)>)> {
        (1usize..30).prop_flat_map(|n| {
            let cuts = prop::collection::vec((0..n, 0usize..4, 0usize..4), 0..8);
            (Just(n), cuts).prop_map(|(n, raw)| {
                let mut taken = vec![false; n];
                let mut spans = Vec::new();
                for (s, len, c) in raw {
                    let e = (s + len).min(n - 1);
                    if (s..=e).all(|i| !taken[i]) {
                        (s..=e).for_each(|i| taken[i] = true);
                        spans.push((s, e, Category::ALL[c]));
                    }
                }
                (n, spans)
            })
        })
    }

    proptest! {
        #[test]
        fn emission_is_well_formed_and_invertible((n, raw) in arb_spans()) {
            let words: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
            let s = Sentence::new("d", 0, words.clone());
            let mut spans: Vec<EntitySpan> = raw.iter().map(|&(a, b, c)| EntitySpan::over(&words, a, b, c)).collect();
            let recs = emit_bio(&s, &spans, Granularity::Word).unwrap();
            let labels: Vec<BioLabel> = recs.iter().map(|r| r.label).collect();
            prop_assert!(is_well_formed(&labels));
            spans.sort();
            prop_assert_eq!(&spans_from_bio(&words, &labels).unwrap(), &spans);
            let again = emit_bio(&s, &spans, Granularity::Word).unwrap();
            prop_assert_eq!(again, recs);
        }

        #[test]
        fn chunks_agree_with_strict_extraction((n, raw) in arb_spans()) {
            let words: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
            let spans: Vec<EntitySpan> = raw.iter().map(|&(a, b, c)| EntitySpan::over(&words, a, b, c)).collect();
            let s = Sentence::new("d", 0, words.clone());
            let tags: Vec<String> = emit_bio(&s, &spans, Granularity::Word).unwrap().iter().map(|r| r.label.to_string()).collect();
            let mut strict: Vec<(String, usize, usize)> = spans.iter().map(|s| (s.category.to_string(), s.start, s.end)).collect();
            strict.sort_by_key(|c| c.1);
            prop_assert_eq!(entity_chunks(&tags), strict);
        }
    }
}
