//! Byte-exact training-corpus serializations for the two generators.
//!
//! Article corpora: every article is `[MASK]l1[SEP]l2…[SEP]ln[CLS]`, articles
//! concatenated. Titled corpora: every pair is `content[SEP]title[EOS]`.

use crate::error::{Error, Result};

pub const MASK: &str = "[MASK]";
pub const SEP: &str = "[SEP]";
pub const CLS: &str = "[CLS]";
pub const EOS: &str = "[EOS]";

const MARKERS: [&str; 4] = [MASK, SEP, CLS, EOS];

pub const MIN_TITLE_WORDS: usize = 2;
pub const MIN_CONTENT_WORDS: usize = 100;

fn marker_in(text: &str) -> Option<&'static str> {
    MARKERS.into_iter().find(|m| text.contains(m))
}

/// Articles, each an ordered, non-empty list of paragraph lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArticleCorpus {
    articles: Vec<Vec<String>>,
}

impl ArticleCorpus {
    pub fn new(articles: Vec<Vec<String>>) -> Result<Self> {
        for (a, lines) in articles.iter().enumerate() {
            if lines.is_empty() {
                return Err(Error::Invalid(format!("article {a} has no lines")));
            }
            for (l, line) in lines.iter().enumerate() {
                if let Some(m) = marker_in(line) {
                    return Err(Error::Invalid(format!(
                        "article {a}, line {l} contains the marker {m}"
                    )));
                }
            }
        }
        Ok(ArticleCorpus { articles })
    }

    pub fn articles(&self) -> &[Vec<String>] {
        &self.articles
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TitledPair {
    pub title: String,
    pub content: String,
}

/// Title/content pairs passing the length filter: titles of at least two
/// words, contents of at least 100 words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TitledCorpus {
    pairs: Vec<TitledPair>,
}

impl TitledCorpus {
    pub fn new(pairs: Vec<TitledPair>) -> Result<Self> {
        for (i, p) in pairs.iter().enumerate() {
            check_pair(p).map_err(|msg| Error::Invalid(format!("pair {i}: {msg}")))?;
        }
        Ok(TitledCorpus { pairs })
    }

    pub fn pairs(&self) -> &[TitledPair] {
        &self.pairs
    }
}

fn check_pair(p: &TitledPair) -> std::result::Result<(), String> {
    if let Some(m) = marker_in(&p.title) {
        return Err(format!("title contains the marker {m}"));
    }
    if let Some(m) = marker_in(&p.content) {
        return Err(format!("content contains the marker {m}"));
    }
    let tw = p.title.split_whitespace().count();
    if tw < MIN_TITLE_WORDS {
        return Err(format!("title has {tw} word(s), need {MIN_TITLE_WORDS}"));
    }
    let cw = p.content.split_whitespace().count();
    if cw < MIN_CONTENT_WORDS {
        return Err(format!(
            "content has {cw} word(s), need {MIN_CONTENT_WORDS}"
        ));
    }
    Ok(())
}

pub fn serialize_articles(corpus: &ArticleCorpus) -> String {
    let mut out = String::new();
    for lines in &corpus.articles {
        out.push_str(MASK);
        for (i, line) in lines.iter().enumerate() {
            if i > 0 {
                out.push_str(SEP);
            }
            out.push_str(line);
        }
        out.push_str(CLS);
    }
    out
}

/// Position and identity of the next marker at or after `from`.
fn next_marker(text: &str, from: usize) -> Option<(usize, &'static str)> {
    MARKERS
        .into_iter()
        .filter_map(|m| text[from..].find(m).map(|i| (from + i, m)))
        .min_by_key(|(i, _)| *i)
}

pub fn parse_articles(text: &str) -> Result<ArticleCorpus> {
    let mut articles = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        if !text[pos..].starts_with(MASK) {
            return Err(Error::Parse {
                offset: pos,
                message: format!("expected {MASK}"),
            });
        }
        pos += MASK.len();
        let mut lines = Vec::new();
        loop {
            let (at, marker) = next_marker(text, pos).ok_or(Error::Parse {
                offset: text.len(),
                message: format!("unterminated article, expected {CLS}"),
            })?;
            lines.push(text[pos..at].to_string());
            pos = at + marker.len();
            match marker {
                SEP => continue,
                CLS => break,
                other => {
                    return Err(Error::Parse {
                        offset: at,
                        message: format!("unexpected {other} inside article"),
                    })
                }
            }
        }
        articles.push(lines);
    }
    Ok(ArticleCorpus { articles })
}

pub fn serialize_titled(corpus: &TitledCorpus) -> String {
    let mut out = String::new();
    for p in &corpus.pairs {
        out.push_str(&p.content);
        out.push_str(SEP);
        out.push_str(&p.title);
        out.push_str(EOS);
    }
    out
}

pub fn parse_titled(text: &str) -> Result<TitledCorpus> {
    let mut pairs = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let start = pos;
        let (at, marker) = next_marker(text, pos).ok_or(Error::Parse {
            offset: text.len(),
            message: format!("expected {SEP} after content"),
        })?;
        if marker != SEP {
            return Err(Error::Parse {
                offset: at,
                message: format!("expected {SEP}, found {marker}"),
            });
        }
        let content = text[pos..at].to_string();
        pos = at + SEP.len();
        let (at, marker) = next_marker(text, pos).ok_or(Error::Parse {
            offset: text.len(),
            message: format!("missing {EOS} terminator"),
        })?;
        if marker != EOS {
            return Err(Error::Parse {
                offset: at,
                message: format!("expected {EOS}, found {marker}"),
            });
        }
        let pair = TitledPair {
            title: text[pos..at].to_string(),
            content,
        };
        check_pair(&pair).map_err(|message| Error::Parse {
            offset: start,
            message,
        })?;
        pairs.push(pair);
        pos = at + EOS.len();
    }
    Ok(TitledCorpus { pairs })
}
