//! Corpus ingestion, tokenization and frequency–rank tables.
//!
//! Two on-disk formats are understood:
//!
//! * `plain-lines`: UTF-8, one sentence per line. A blank line (or the end of
//!   a file) closes the current document. Lines are run through [`tokenize`].
//! * `conll-bio`: UTF-8, one `token label` row per line. A blank line closes a
//!   sentence, two consecutive blank lines close a document. Tokens are taken
//!   verbatim, no re-tokenization happens.
//!
//! When `ingest` is pointed at a directory every regular file inside it is read
//! in file-name order.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub position: usize,
}

/// Identity of a sentence inside a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceId {
    pub doc_id: String,
    pub sent_id: usize,
}

impl fmt::Display for SentenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.doc_id, self.sent_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub doc_id: String,
    pub sent_id: usize,
    /// Raw per-token labels when the sentence came from a labeled source.
    pub labels: Option<Vec<String>>,
}

impl Sentence {
    /// Builds a sentence from already tokenized surfaces.
    pub fn new<I, S>(doc_id: impl Into<String>, sent_id: usize, surfaces: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = surfaces
            .into_iter()
            .enumerate()
            .map(|(position, s)| Token {
                surface: s.into(),
                position,
            })
            .collect();
        Sentence {
            tokens,
            doc_id: doc_id.into(),
            sent_id,
            labels: None,
        }
    }

    pub fn from_text(doc_id: impl Into<String>, sent_id: usize, text: &str) -> Self {
        let mut s = Sentence::new(doc_id, sent_id, Vec::<String>::new());
        s.tokens = tokenize(text);
        s
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn id(&self) -> SentenceId {
        SentenceId {
            doc_id: self.doc_id.clone(),
            sent_id: self.sent_id,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> + '_ {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    pub fn text(&self) -> String {
        self.surfaces().collect::<Vec<_>>().join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub type_tag: String,
}

impl Corpus {
    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> + '_ {
        self.documents.iter().flat_map(|d| d.sentences.iter())
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.sentences().flat_map(|s| s.surfaces())
    }

    /// Frequency table over every token occurrence in the corpus.
    pub fn word_table(&self) -> FrequencyTable {
        build_frequency_table(self.words())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    PlainLines,
    ConllBio,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain-lines" | "plain" | "lines" => Ok(Format::PlainLines),
            "conll-bio" | "conll" => Ok(Format::ConllBio),
            other => Err(Error::Invalid(format!("unknown corpus format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::PlainLines => "plain-lines",
            Format::ConllBio => "conll-bio",
        })
    }
}

pub fn ingest(path: &Path, format: Format) -> Result<Corpus> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let files: Vec<PathBuf> = if meta.is_dir() {
        let mut files = Vec::new();
        for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let entry = entry.map_err(|e| Error::io(path, e))?;
            if entry.path().is_file() {
                files.push(entry.path());
            }
        }
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };

    let mut corpus = Corpus::default();
    for file in &files {
        let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let docs = match format {
            Format::PlainLines => parse_plain_lines(&text, &stem),
            Format::ConllBio => parse_conll(&text, &stem, file)?,
        };
        corpus.documents.extend(docs);
    }
    Ok(corpus)
}

fn doc_name(stem: &str, index: usize) -> String {
    format!("{stem}#{index}")
}

pub fn parse_plain_lines(text: &str, stem: &str) -> Vec<Document> {
    let mut docs = Vec::new();
    let mut current: Vec<Sentence> = Vec::new();
    let flush = |current: &mut Vec<Sentence>, docs: &mut Vec<Document>| {
        if !current.is_empty() {
            docs.push(Document {
                id: doc_name(stem, docs.len()),
                sentences: std::mem::take(current),
            });
        }
    };
    for line in text.lines() {
        let tokens = tokenize(line);
        if tokens.is_empty() {
            flush(&mut current, &mut docs);
            continue;
        }
        let doc_id = doc_name(stem, docs.len());
        current.push(Sentence {
            tokens,
            doc_id,
            sent_id: current.len(),
            labels: None,
        });
    }
    flush(&mut current, &mut docs);
    docs
}

pub fn parse_conll(text: &str, stem: &str, path: &Path) -> Result<Vec<Document>> {
    let mut docs: Vec<Document> = Vec::new();
    let mut sentences: Vec<Sentence> = Vec::new();
    let mut surfaces: Vec<String> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut blank_run = 0usize;

    fn close_sentence(
        docs: &[Document],
        sentences: &mut Vec<Sentence>,
        surfaces: &mut Vec<String>,
        labels: &mut Vec<String>,
        stem: &str,
    ) {
        if surfaces.is_empty() {
            return;
        }
        let s = Sentence::new(
            doc_name(stem, docs.len()),
            sentences.len(),
            std::mem::take(surfaces),
        )
        .with_labels(std::mem::take(labels));
        sentences.push(s);
    }

    fn close_document(docs: &mut Vec<Document>, sentences: &mut Vec<Sentence>, stem: &str) {
        if sentences.is_empty() {
            return;
        }
        let id = doc_name(stem, docs.len());
        docs.push(Document {
            id,
            sentences: std::mem::take(sentences),
        });
    }

    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            blank_run += 1;
            close_sentence(&docs, &mut sentences, &mut surfaces, &mut labels, stem);
            if blank_run >= 2 {
                close_document(&mut docs, &mut sentences, stem);
            }
            continue;
        }
        blank_run = 0;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::Malformed {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected `token label`, found {} column(s)", cols.len()),
            });
        }
        surfaces.push(cols[0].to_string());
        labels.push(cols[1].to_string());
    }
    close_sentence(&docs, &mut sentences, &mut surfaces, &mut labels, stem);
    close_document(&mut docs, &mut sentences, stem);
    Ok(docs)
}

/// Accumulates conll-bio text. Sentences are separated by one blank line and
/// documents by two.
#[derive(Debug, Default)]
pub struct ConllWriter {
    buf: String,
    open_document: bool,
    open_sentence: bool,
}

impl ConllWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_sentence<'a, T, L>(&mut self, tokens: T, labels: L)
    where
        T: IntoIterator<Item = &'a str>,
        L: IntoIterator<Item = &'a str>,
    {
        if self.open_sentence {
            self.buf.push('\n');
        }
        for (tok, label) in tokens.into_iter().zip(labels) {
            self.buf.push_str(tok);
            self.buf.push(' ');
            self.buf.push_str(label);
            self.buf.push('\n');
        }
        self.open_sentence = true;
        self.open_document = true;
    }

    pub fn end_document(&mut self) {
        if self.open_document {
            self.buf.push_str("\n\n");
        }
        self.open_document = false;
        self.open_sentence = false;
    }

    pub fn finish(mut self) -> String {
        if self.open_document {
            self.buf.push('\n');
        }
        self.buf
    }
}

/// Writes a corpus back as conll-bio. Sentences without labels get `O`.
pub fn to_conll(corpus: &Corpus) -> String {
    let mut w = ConllWriter::new();
    for doc in &corpus.documents {
        for s in &doc.sentences {
            let labels: Vec<&str> = match &s.labels {
                Some(l) => l.iter().map(String::as_str).collect(),
                None => vec!["O"; s.len()],
            };
            w.push_sentence(s.surfaces(), labels);
        }
        w.end_document();
    }
    w.finish()
}

pub fn to_plain_lines<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&s.text());
        out.push('\n');
    }
    out
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '，' | '。'
                | '、'
                | '；'
                | '：'
                | '？'
                | '！'
                | '“'
                | '”'
                | '‘'
                | '’'
                | '（'
                | '）'
                | '《'
                | '》'
                | '【'
                | '】'
                | '…'
                | '\u{2014}'
        )
}

/// Whitespace tokenization with leading and trailing punctuation detached,
/// one token per punctuation character. Interior punctuation (`3.5`,
/// `oil-spill`) stays attached. Case is preserved.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut surfaces: Vec<String> = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let lead = chars.iter().take_while(|c| is_punct(**c)).count();
        if lead == chars.len() {
            surfaces.extend(chars.iter().map(|c| c.to_string()));
            continue;
        }
        let trail = chars.iter().rev().take_while(|c| is_punct(**c)).count();
        surfaces.extend(chars[..lead].iter().map(|c| c.to_string()));
        surfaces.push(chars[lead..chars.len() - trail].iter().collect());
        surfaces.extend(chars[chars.len() - trail..].iter().map(|c| c.to_string()));
    }
    surfaces
        .into_iter()
        .enumerate()
        .map(|(position, surface)| Token { surface, position })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyEntry {
    pub item: String,
    pub frequency: u64,
    pub rank: usize,
}

/// Items ranked by descending frequency; ties go to the lexicographically
/// smaller item so that ranks are strict and `r_t` equals the number of
/// distinct items.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    entries: Vec<FrequencyEntry>,
    total_tokens: u64,
    index: HashMap<String, usize>,
}

impl FrequencyTable {
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut merged: HashMap<String, u64> = HashMap::new();
        for (item, f) in counts {
            if f > 0 {
                *merged.entry(item.into()).or_default() += f;
            }
        }
        let mut pairs: Vec<(String, u64)> = merged.into_iter().collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total_tokens = pairs.iter().map(|p| p.1).sum();
        let entries: Vec<FrequencyEntry> = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (item, frequency))| FrequencyEntry {
                item,
                frequency,
                rank: i + 1,
            })
            .collect();
        let index = entries.iter().map(|e| (e.item.clone(), e.rank)).collect();
        FrequencyTable {
            entries,
            total_tokens,
            index,
        }
    }

    pub fn entries(&self) -> &[FrequencyEntry] {
        &self.entries
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Total rank, i.e. the number of distinct items.
    pub fn r_t(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rank_of(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    /// `(rank, frequency)` pairs as reals, ready for regression.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.entries
            .iter()
            .map(|e| (e.rank as f64, e.frequency as f64))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,item,frequency\n");
        for e in &self.entries {
            let item = if e.item.contains([',', '"', '\n']) {
                format!("\"{}\"", e.item.replace('"', "\"\""))
            } else {
                e.item.clone()
            };
            out.push_str(&format!("{},{},{}\n", e.rank, item, e.frequency));
        }
        out
    }
}

pub fn build_frequency_table<I, S>(items: I) -> FrequencyTable
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    for item in items {
        let item = item.as_ref();
        match counts.get_mut(item) {
            Some(c) => *c += 1,
            None => {
                counts.insert(item.to_string(), 1);
            }
        }
    }
    FrequencyTable::from_counts(counts)
}
