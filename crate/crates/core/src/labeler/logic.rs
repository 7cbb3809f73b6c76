//! Dependency-constraint and horn rules. Both read externally supplied
//! annotations (dependency arcs, ground facts); no parser is bundled.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labeled arc between two token indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepArc {
    pub head: usize,
    pub dependent: usize,
    pub relation: String,
}

/// Fact argument: an inclusive token range `[start, end]` or a literal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactArg {
    Span(usize, usize),
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub predicate: String,
    pub args: Vec<FactArg>,
}

/// Per-sentence annotations consumed by dependency and horn rules.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Annotations {
    pub arcs: Vec<DepArc>,
    pub facts: Vec<Fact>,
}

fn grammar(position: usize, message: impl Into<String>) -> Error {
    Error::Grammar {
        position,
        message: message.into(),
    }
}

/// `{rel; rel; …; word length < N}`: contiguous components of arcs carrying
/// any listed relation, optionally bounded in token count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct DependencyRule {
    relations: BTreeSet<String>,
    /// Largest admissible span length in tokens.
    max_len: Option<usize>,
}

impl DependencyRule {
    pub fn parse(body: &str) -> Result<Self> {
        let inner = body.trim();
        let base = body.len() - body.trim_start().len();
        let (inner, base) = match inner.strip_prefix('{') {
            Some(rest) => (
                rest.strip_suffix('}')
                    .ok_or_else(|| grammar(base, "unclosed '{'"))?,
                base + 1,
            ),
            None => (inner, base),
        };
        let mut relations = BTreeSet::new();
        let mut max_len = None;
        let mut offset = base;
        for item in inner.split([';', ',']) {
            let at = offset + item.len() - item.trim_start().len();
            offset += item.len() + 1;
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let bound = item
                .strip_prefix("word length")
                .or_else(|| item.strip_prefix("len"))
                .map(str::trim);
            match bound {
                Some(b) => {
                    let (strict, num) = if let Some(n) = b.strip_prefix("<=") {
                        (false, n)
                    } else if let Some(n) = b.strip_prefix('<') {
                        (true, n)
                    } else {
                        return Err(grammar(at, "expected '<' or '<=' in length bound"));
                    };
                    let n: usize = num
                        .trim()
                        .parse()
                        .map_err(|_| grammar(at, "length bound is not a number"))?;
                    let limit = if strict { n.checked_sub(1) } else { Some(n) };
                    max_len = Some(
                        limit
                            .filter(|&l| l > 0)
                            .ok_or_else(|| grammar(at, "empty length bound"))?,
                    );
                }
                None => {
                    relations.insert(item.to_string());
                }
            }
        }
        if relations.is_empty() {
            return Err(grammar(base, "no relations listed"));
        }
        Ok(DependencyRule { relations, max_len })
    }

    /// Inclusive token ranges, ordered by start.
    pub fn find(&self, n_tokens: usize, arcs: &[DepArc]) -> Vec<(usize, usize)> {
        let mut parent: Vec<usize> = (0..n_tokens).collect();
        fn root(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut linked = vec![false; n_tokens];
        for a in arcs {
            if a.head >= n_tokens
                || a.dependent >= n_tokens
                || !self.relations.contains(&a.relation)
            {
                continue;
            }
            let (x, y) = (root(&mut parent, a.head), root(&mut parent, a.dependent));
            parent[x] = y;
            linked[a.head] = true;
            linked[a.dependent] = true;
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in (0..n_tokens).filter(|&i| linked[i]) {
            let r = root(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let mut out: Vec<(usize, usize)> = groups
            .into_values()
            .filter(|g| {
                let (lo, hi) = (g[0], g[g.len() - 1]);
                let contiguous = hi - lo + 1 == g.len();
                contiguous && self.max_len.is_none_or(|m| g.len() <= m)
            })
            .map(|g| (g[0], g[g.len() - 1]))
            .collect();
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Term {
    Var(String),
    Lit(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Atom {
    predicate: String,
    args: Vec<Term>,
}

/// `A(?x) ^ b(?x, ?y) ^ C(?y, "lit") -> Head(?x, …)`: the first variable of
/// the head is labeled. Unary atoms whose predicate has no supplied facts
/// fall back to matching tokens that start with the predicate name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct HornRule {
    body: Vec<Atom>,
    target: String,
}

fn parse_atom(text: &str, at: usize) -> Result<Atom> {
    let t = text.trim();
    let at = at + text.len() - text.trim_start().len();
    let open = t
        .find('(')
        .ok_or_else(|| grammar(at, "expected '(' in atom"))?;
    let predicate = t[..open].trim();
    if predicate.is_empty() {
        return Err(grammar(at, "atom has no predicate"));
    }
    let inner = t[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| grammar(at + open, "unclosed atom"))?;
    let mut args = Vec::new();
    for a in inner.split(',') {
        let a = a.trim();
        if a.is_empty() {
            return Err(grammar(at + open + 1, "empty argument"));
        }
        args.push(match a.strip_prefix('?') {
            Some(v) if !v.is_empty() => Term::Var(v.to_string()),
            Some(_) => return Err(grammar(at + open + 1, "empty variable name")),
            None => Term::Lit(a.trim_matches('"').to_string()),
        });
    }
    Ok(Atom {
        predicate: predicate.to_string(),
        args,
    })
}

impl HornRule {
    pub fn parse(body: &str) -> Result<Self> {
        if body.trim().is_empty() {
            return Err(grammar(0, "empty horn rule"));
        }
        let arrow = body
            .find("->")
            .ok_or_else(|| grammar(body.len(), "expected '->'"))?;
        let mut atoms = Vec::new();
        let mut offset = 0;
        for part in body[..arrow].split('^') {
            atoms.push(parse_atom(part, offset)?);
            offset += part.len() + 1;
        }
        let head = parse_atom(&body[arrow + 2..], arrow + 2)?;
        let target = head
            .args
            .iter()
            .find_map(|t| match t {
                Term::Var(v) => Some(v.clone()),
                Term::Lit(_) => None,
            })
            .ok_or_else(|| grammar(arrow + 2, "head has no variable"))?;
        if !atoms
            .iter()
            .flat_map(|a| &a.args)
            .any(|t| *t == Term::Var(target.clone()))
        {
            return Err(grammar(
                arrow + 2,
                format!("head variable ?{target} is unbound in the body"),
            ));
        }
        Ok(HornRule {
            body: atoms,
            target,
        })
    }

    fn solve<S: AsRef<str>>(
        &self,
        k: usize,
        words: &[S],
        facts: &[Fact],
        env: &mut HashMap<String, (usize, usize)>,
        out: &mut BTreeSet<(usize, usize)>,
    ) {
        let Some(atom) = self.body.get(k) else {
            if let Some(&span) = env.get(&self.target) {
                out.insert(span);
            }
            return;
        };
        let text = |(s, e): (usize, usize)| {
            words[s..=e]
                .iter()
                .map(AsRef::as_ref)
                .collect::<Vec<_>>()
                .join(" ")
        };
        let known: Vec<&Fact> = facts
            .iter()
            .filter(|f| f.predicate == atom.predicate && f.args.len() == atom.args.len())
            .collect();
        let has_facts = facts.iter().any(|f| f.predicate == atom.predicate);

        if !has_facts && atom.args.len() == 1 {
            let prefix = atom.predicate.to_lowercase();
            for (i, w) in words.iter().enumerate() {
                if !w.as_ref().to_lowercase().starts_with(&prefix) {
                    continue;
                }
                match &atom.args[0] {
                    Term::Var(v) => match env.get(v) {
                        Some(&b) if b != (i, i) => continue,
                        Some(_) => self.solve(k + 1, words, facts, env, out),
                        None => {
                            env.insert(v.clone(), (i, i));
                            self.solve(k + 1, words, facts, env, out);
                            env.remove(v);
                        }
                    },
                    Term::Lit(l) => {
                        if w.as_ref().eq_ignore_ascii_case(l) {
                            self.solve(k + 1, words, facts, env, out);
                        }
                    }
                }
            }
            return;
        }

        for fact in known {
            let mut added = Vec::new();
            let mut ok = true;
            for (term, arg) in atom.args.iter().zip(&fact.args) {
                ok = match (term, arg) {
                    (Term::Var(v), FactArg::Span(s, e)) if *s <= *e && *e < words.len() => {
                        match env.get(v) {
                            Some(b) => *b == (*s, *e),
                            None => {
                                env.insert(v.clone(), (*s, *e));
                                added.push(v.clone());
                                true
                            }
                        }
                    }
                    (Term::Lit(l), FactArg::Literal(f)) => l.eq_ignore_ascii_case(f),
                    (Term::Lit(l), FactArg::Span(s, e)) if *s <= *e && *e < words.len() => {
                        text((*s, *e)).eq_ignore_ascii_case(l)
                    }
                    _ => false,
                };
                if !ok {
                    break;
                }
            }
            if ok {
                self.solve(k + 1, words, facts, env, out);
            }
            for v in added {
                env.remove(&v);
            }
        }
    }

    /// Inclusive ranges bound to the head variable, ordered by start.
    pub fn find<S: AsRef<str>>(&self, words: &[S], facts: &[Fact]) -> Vec<(usize, usize)> {
        let mut out = BTreeSet::new();
        self.solve(0, words, facts, &mut HashMap::new(), &mut out);
        out.into_iter().collect()
    }
}
