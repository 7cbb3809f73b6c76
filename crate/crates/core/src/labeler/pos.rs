//! Part-of-speech tagging: a longest-match lexicon tagger and an adapter
//! for a remote tagging service.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TaggedToken;
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::genbridge::remote::{JsonClient, RemoteError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tagset {
    pub name: String,
    pub tags: BTreeSet<String>,
}

const CHINESE_TAGS: &[&str] = &[
    "a", "ad", "ag", "an", "b", "c", "d", "e", "f", "h", "i", "j", "k", "l", "m", "mq", "n", "ng",
    "nl", "nr", "ns", "nt", "nw", "nz", "o", "p", "q", "r", "s", "t", "u", "ug", "uj", "ul", "uv",
    "uz", "v", "vd", "vg", "vn", "w", "x", "y", "z",
];

const PENN_TAGS: &[&str] = &[
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP", "NNPS",
    "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB", "VBD", "VBG",
    "VBN", "VBP", "VBZ", "WDT", "WP", "WP$", "WRB", ".", ",", ":", "``", "''", "-LRB-", "-RRB-",
    "#", "$",
];

impl Tagset {
    pub fn new(name: impl Into<String>, tags: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Tagset {
            name: name.into(),
            tags: tags.into_iter().map(Into::into).collect(),
        }
    }

    /// Chinese-style tags (n, nz, a, ug, q, …).
    pub fn chinese() -> Self {
        Tagset::new("chinese", CHINESE_TAGS.iter().copied())
    }

    /// Penn Treebank tags.
    pub fn penn() -> Self {
        Tagset::new("penn", PENN_TAGS.iter().copied())
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "chinese" => Ok(Tagset::chinese()),
            "penn" => Ok(Tagset::penn()),
            other => Err(Error::Invalid(format!("unknown tagset {other:?}"))),
        }
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    pub fn check(&self, tag: &str) -> Result<()> {
        if self.contains(tag) {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "tag {tag:?} is not in the {} tagset",
                self.name
            )))
        }
    }
}

/// Surface → tag map; surfaces may span several tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PosLexicon {
    entries: HashMap<Vec<String>, String>,
    max_words: usize,
}

impl PosLexicon {
    pub fn insert(&mut self, surface: &str, tag: impl Into<String>) {
        let words: Vec<String> = surface.split_whitespace().map(str::to_string).collect();
        if words.is_empty() {
            return;
        }
        self.max_words = self.max_words.max(words.len());
        self.entries.insert(words, tag.into());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fails on the first entry whose tag is outside `tagset`.
    pub fn check_tagset(&self, tagset: &Tagset) -> Result<()> {
        let mut bad: Vec<(&Vec<String>, &String)> = self
            .entries
            .iter()
            .filter(|(_, t)| !tagset.contains(t))
            .collect();
        bad.sort();
        match bad.first() {
            None => Ok(()),
            Some((words, tag)) => Err(Error::Invalid(format!(
                "lexicon entry {:?} has tag {tag:?}, not in the {} tagset",
                words.join(" "),
                tagset.name
            ))),
        }
    }

    /// Longest entry starting at `tokens[0]`: (word count, tag).
    fn longest<S: AsRef<str>>(&self, tokens: &[S]) -> Option<(usize, &str)> {
        let upto = self.max_words.min(tokens.len());
        (1..=upto).rev().find_map(|n| {
            let key: Vec<String> = tokens[..n].iter().map(|t| t.as_ref().to_string()).collect();
            self.entries.get(&key).map(|tag| (n, tag.as_str()))
        })
    }
}

/// Parses `surface<TAB>tag` lines; blank lines are skipped.
pub fn parse_pos_lexicon(text: &str, path: &Path) -> Result<PosLexicon> {
    let mut lex = PosLexicon::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: &str| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message: message.to_string(),
        };
        let (surface, tag) = line
            .split_once('\t')
            .ok_or_else(|| malformed("expected surface<TAB>tag"))?;
        let tag = tag.trim();
        if surface.trim().is_empty() || tag.is_empty() || tag.contains(char::is_whitespace) {
            return Err(malformed("empty surface or malformed tag"));
        }
        lex.insert(surface, tag);
    }
    Ok(lex)
}

pub fn load_pos_lexicon(path: &Path) -> Result<PosLexicon> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pos_lexicon(&text, path)
}

/// Greedy longest-match tagging; unmatched tokens get `default_pos`.
pub fn pos_tag(sentence: &Sentence, lexicon: &PosLexicon, default_pos: &str) -> Vec<TaggedToken> {
    let words: Vec<&str> = sentence.surfaces().collect();
    let mut out = Vec::with_capacity(words.len());
    let mut i = 0;
    let mut unit = 0;
    while i < words.len() {
        let (n, tag) = lexicon.longest(&words[i..]).unwrap_or((1, default_pos));
        for w in &words[i..i + n] {
            out.push(TaggedToken {
                surface: w.to_string(),
                pos: tag.to_string(),
                unit,
            });
        }
        i += n;
        unit += 1;
    }
    out
}

pub trait PosTagger: Sync {
    fn tag(&self, sentence: &Sentence) -> Result<Vec<TaggedToken>>;
}

#[derive(Debug, Clone)]
pub struct LexiconTagger {
    pub lexicon: PosLexicon,
    pub default_pos: String,
}

impl PosTagger for LexiconTagger {
    fn tag(&self, sentence: &Sentence) -> Result<Vec<TaggedToken>> {
        Ok(pos_tag(sentence, &self.lexicon, &self.default_pos))
    }
}

#[derive(Debug, Serialize)]
struct TagRequest<'a> {
    tokens: Vec<&'a str>,
}

#[derive(Debug, Deserialize)]
struct TagResponse {
    tags: Vec<String>,
}

/// Posts `{"tokens": [...]}` and expects `{"tags": [...]}`, one tag per token.
#[derive(Debug, Clone)]
pub struct RemoteTagger {
    pub client: JsonClient,
    pub tagset: Option<Tagset>,
}

impl PosTagger for RemoteTagger {
    fn tag(&self, sentence: &Sentence) -> Result<Vec<TaggedToken>> {
        let req = TagRequest {
            tokens: sentence.surfaces().collect(),
        };
        let resp: TagResponse = self.client.post_json(&req)?;
        if resp.tags.len() != sentence.len() {
            return Err(RemoteError::WrongCount {
                endpoint: self.client.config().endpoint.clone(),
                expected: sentence.len(),
                got: resp.tags.len(),
            }
            .into());
        }
        if let Some(ts) = &self.tagset {
            for t in &resp.tags {
                ts.check(t)?;
            }
        }
        Ok(sentence
            .surfaces()
            .zip(resp.tags)
            .enumerate()
            .map(|(unit, (s, pos))| TaggedToken {
                surface: s.to_string(),
                pos,
                unit,
            })
            .collect())
    }
}
