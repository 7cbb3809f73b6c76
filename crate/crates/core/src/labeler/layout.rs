//! Layout templates such as `[Aw]₂ : [Yw]₁ : [Tw]₇ : [Jw]₁ : [V] : [I] : [Pg]`.
//!
//! Slots are separated by `:`. A slot `[Name]` takes a count written as a
//! subscript (`₂`) or as `_2`; the default is 1. Matching starts at the first
//! token; each slot consumes `count` word tokens and punctuation between
//! words is skipped.

use crate::error::{Error, Result};

use super::keyword::Binding;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct LayoutTemplate {
    slots: Vec<(String, usize)>,
}

fn grammar(position: usize, message: impl Into<String>) -> Error {
    Error::Grammar {
        position,
        message: message.into(),
    }
}

fn subscript_digit(c: char) -> Option<u32> {
    let d = c as u32;
    (0x2080..=0x2089).contains(&d).then(|| d - 0x2080)
}

fn is_punct(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

impl LayoutTemplate {
    pub fn parse(body: &str) -> Result<Self> {
        if body.trim().is_empty() {
            return Err(grammar(0, "empty layout template"));
        }
        let mut slots = Vec::new();
        let mut offset = 0;
        for part in body.split(':') {
            let lead = part.len() - part.trim_start().len();
            let at = offset + lead;
            let slot = part.trim();
            offset += part.len() + 1;

            let inner = slot
                .strip_prefix('[')
                .ok_or_else(|| grammar(at, "slot must start with '['"))?;
            let close = inner
                .find(']')
                .ok_or_else(|| grammar(at, "unclosed slot bracket"))?;
            let name = inner[..close].trim();
            if name.is_empty() {
                return Err(grammar(at + 1, "empty slot name"));
            }
            let suffix = inner[close + 1..].trim();
            let count = if suffix.is_empty() {
                1
            } else if let Some(n) = suffix.strip_prefix('_') {
                n.parse::<usize>()
                    .map_err(|_| grammar(at + close + 2, "bad slot count"))?
            } else {
                suffix
                    .chars()
                    .try_fold(0usize, |acc, c| {
                        subscript_digit(c).map(|d| acc * 10 + d as usize)
                    })
                    .ok_or_else(|| grammar(at + close + 2, "bad slot count"))?
            };
            if count == 0 {
                return Err(grammar(at + close + 2, "slot count must be positive"));
            }
            slots.push((name.to_string(), count));
        }
        Ok(LayoutTemplate { slots })
    }

    /// Per-slot token ranges when the sentence fits the layout.
    pub fn bind<S: AsRef<str>>(&self, words: &[S]) -> Option<Vec<Binding>> {
        let mut pos = 0;
        let mut out = Vec::with_capacity(self.slots.len());
        for (name, count) in &self.slots {
            let mut first = None;
            let mut last = 0;
            let mut taken = 0;
            while taken < *count {
                let w = words.get(pos)?;
                if !is_punct(w.as_ref()) {
                    first.get_or_insert(pos);
                    last = pos;
                    taken += 1;
                }
                pos += 1;
            }
            out.push(Binding {
                name: name.clone(),
                start: first?,
                end: last,
            });
        }
        Some(out)
    }
}
