//! Keyword patterns such as `^[Who]$books$[*]$[What]$from$[Where]$`.
//!
//! `^` anchors the match at the sentence start and `$` closes a slot. A slot
//! is a literal phrase (exact token match), a capture `[Name]` (one or more
//! tokens) or the wildcard `[*]` (zero or more tokens). A `*` after a slot
//! adds a wildcard behind it. Captures and wildcards are lazy.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Elem {
    Literal(Vec<String>),
    Capture(String),
    Wild,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct KeywordPattern {
    anchored: bool,
    elems: Vec<Elem>,
}

/// A capture variable bound to the inclusive token range `start..=end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Binding {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct KeywordMatch {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub bindings: Vec<Binding>,
}

fn grammar(position: usize, message: impl Into<String>) -> Error {
    Error::Grammar {
        position,
        message: message.into(),
    }
}

impl KeywordPattern {
    pub fn parse(body: &str) -> Result<Self> {
        let trimmed = body.trim_end();
        if trimmed.trim().is_empty() {
            return Err(grammar(0, "empty keyword pattern"));
        }
        let (anchored, mut pos) = match trimmed.find('^') {
            Some(i) if trimmed[..i].trim().is_empty() => (true, i + 1),
            _ => (false, 0),
        };
        let mut elems = Vec::new();
        while pos < trimmed.len() {
            let slot_end = trimmed[pos..].find('$').map_or(trimmed.len(), |i| pos + i);
            let raw = &trimmed[pos..slot_end];
            let lead = raw.len() - raw.trim_start().len();
            let slot = raw.trim();
            let at = pos + lead;
            if slot.is_empty() {
                return Err(grammar(at, "empty slot"));
            }
            let (slot, wild_after) = match slot.strip_suffix('*') {
                Some(rest) if !rest.is_empty() && !slot.ends_with("[*]") => (rest.trim_end(), true),
                _ => (slot, false),
            };
            if let Some(inner) = slot.strip_prefix('[') {
                let name = inner
                    .strip_suffix(']')
                    .ok_or_else(|| grammar(at, "unclosed capture bracket"))?
                    .trim();
                if name.is_empty() || name.contains(['[', ']']) {
                    return Err(grammar(at + 1, "invalid capture name"));
                }
                elems.push(if name == "*" {
                    Elem::Wild
                } else {
                    Elem::Capture(name.to_string())
                });
            } else {
                if let Some(i) = slot.find(['[', ']', '^']) {
                    return Err(grammar(at + i, "unexpected bracket or anchor in literal"));
                }
                elems.push(Elem::Literal(
                    slot.split_whitespace().map(str::to_string).collect(),
                ));
            }
            if wild_after {
                elems.push(Elem::Wild);
            }
            pos = slot_end + 1;
        }
        if elems.is_empty() {
            return Err(grammar(pos.min(body.len()), "pattern has no slots"));
        }
        Ok(KeywordPattern { anchored, elems })
    }

    pub fn capture_names(&self) -> impl Iterator<Item = &str> {
        self.elems.iter().filter_map(|e| match e {
            Elem::Capture(n) => Some(n.as_str()),
            _ => None,
        })
    }

    fn step<S: AsRef<str>>(
        &self,
        words: &[S],
        k: usize,
        pos: usize,
        out: &mut Vec<Binding>,
    ) -> Option<usize> {
        let Some(elem) = self.elems.get(k) else {
            return Some(pos);
        };
        match elem {
            Elem::Literal(lit) => {
                let end = pos + lit.len();
                let hit = end <= words.len()
                    && words[pos..end]
                        .iter()
                        .zip(lit)
                        .all(|(w, l)| w.as_ref() == l);
                if hit {
                    self.step(words, k + 1, end, out)
                } else {
                    None
                }
            }
            Elem::Wild => (pos..=words.len()).find_map(|end| self.step(words, k + 1, end, out)),
            Elem::Capture(name) => (pos + 1..=words.len()).find_map(|end| {
                out.push(Binding {
                    name: name.clone(),
                    start: pos,
                    end: end - 1,
                });
                let r = self.step(words, k + 1, end, out);
                if r.is_none() {
                    out.pop();
                }
                r
            }),
        }
    }

    /// Leftmost non-overlapping matches.
    pub fn find_all<S: AsRef<str>>(&self, words: &[S]) -> Vec<KeywordMatch> {
        let mut found = Vec::new();
        let mut from = 0;
        while from <= words.len() {
            let starts = if self.anchored {
                0..=0
            } else {
                from..=words.len()
            };
            let hit = starts.into_iter().find_map(|s| {
                let mut b = Vec::new();
                self.step(words, 0, s, &mut b).map(|e| KeywordMatch {
                    start: s,
                    end: e,
                    bindings: b,
                })
            });
            match hit {
                Some(m) => {
                    from = m.end.max(m.start + 1);
                    found.push(m);
                }
                None => break,
            }
            if self.anchored {
                break;
            }
        }
        found
    }
}
