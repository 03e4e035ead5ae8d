//! Tokenization, compound-identifier splitting, and term-frequency vectors.
//!
//! Every piece of text in the system, whether report prose, source code,
//! log messages, or stack-trace frames, is reduced to lowercase [`Term`]s
//! and counted into a [`TermVector`]. Code tokenization additionally splits
//! compound identifiers (camel case, underscores, Hungarian prefixes) while
//! retaining the full compound.

use std::collections::HashMap;
use std::fmt;

/// A single lowercase term. Never empty, never contains whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(String);

impl Term {
    /// Builds a term from already-lowercased separator-free text.
    /// Returns `None` for empty input.
    pub fn new(text: impl Into<String>) -> Option<Term> {
        let text = text.into();
        if text.is_empty() {
            return None;
        }
        debug_assert!(!text.chars().any(char::is_whitespace));
        debug_assert_eq!(text, text.to_lowercase());
        Some(Term(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Term {
    /// Convenience for literals in tests and fixtures; lowercases the input.
    fn from(s: &str) -> Term {
        Term::new(s.to_lowercase()).expect("non-empty term")
    }
}

/// A weighted bag of terms. Weights are strictly positive; the unit depends
/// on origin: raw occurrence counts for prose and code, inverse positions
/// for stack traces, change counts for churn.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermVector {
    entries: HashMap<Term, f64>,
}

impl TermVector {
    pub fn new() -> TermVector {
        TermVector::default()
    }

    /// Adds `weight` to the entry for `term`. Non-positive weights are ignored
    /// so the no-zero-entry invariant holds by construction.
    pub fn add(&mut self, term: Term, weight: f64) {
        if weight > 0.0 {
            *self.entries.entry(term).or_insert(0.0) += weight;
        }
    }

    pub fn get(&self, term: &Term) -> f64 {
        self.entries.get(term).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, term: &Term) -> bool {
        self.entries.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, f64)> {
        self.entries.iter().map(|(t, &w)| (t, w))
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.entries.keys()
    }

    pub fn weight_sum(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Entries in term order, for deterministic serialization and display.
    pub fn sorted_entries(&self) -> Vec<(&Term, f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(t, &w)| (t, w)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Entrywise sum with another vector.
    pub fn merge(&mut self, other: &TermVector) {
        for (t, w) in other.iter() {
            self.add(t.clone(), w);
        }
    }
}

impl FromIterator<(Term, f64)> for TermVector {
    fn from_iter<I: IntoIterator<Item = (Term, f64)>>(iter: I) -> TermVector {
        let mut v = TermVector::new();
        for (t, w) in iter {
            v.add(t, w);
        }
        v
    }
}

fn is_separator(c: char) -> bool {
    // Underscore is not a separator here; it only splits compounds inside
    // tokenize_code, where the full compound is retained as well.
    !c.is_alphanumeric() && c != '_'
}

/// Splits free-form text on whitespace and punctuation, lowercasing each term.
pub fn tokenize_plain(text: &str) -> Vec<Term> {
    text.split(is_separator)
        .filter(|s| !s.is_empty())
        .map(|s| Term(s.to_lowercase()))
        .collect()
}

/// Splits a single identifier at camel-case boundaries. Digits stay attached
/// to the current segment, so "m1" stays a single term.
fn camel_segments(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut segments = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !current.is_empty() && c.is_uppercase() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            // Boundary at lower->Upper (camel case and Hungarian prefixes)
            // and at the end of an uppercase run ("XMLParser" -> XML|Parser).
            if prev.is_lowercase() || prev.is_numeric() || (prev.is_uppercase() && next_lower) {
                segments.push(std::mem::take(&mut current));
            }
        }
        current.push(c);
    }
    if !current.is_empty() {
        segments.push(current);
    }
    segments
}

/// Tokenizes source code: the splits of [`tokenize_plain`] plus, for every
/// compound identifier, its sub-terms followed by the whole compound.
pub fn tokenize_code(text: &str) -> Vec<Term> {
    let mut out = Vec::new();
    for raw in text.split(is_separator).filter(|s| !s.is_empty()) {
        let mut parts = Vec::new();
        for piece in raw.split('_').filter(|s| !s.is_empty()) {
            parts.extend(camel_segments(piece));
        }
        if parts.len() > 1 {
            for p in &parts {
                out.push(Term(p.to_lowercase()));
            }
            out.push(Term(raw.to_lowercase()));
        } else {
            out.push(Term(raw.to_lowercase()));
        }
    }
    out
}

/// Counts terms into a vector: each weight is the term's multiplicity.
pub fn build_vector(terms: impl IntoIterator<Item = Term>) -> TermVector {
    let mut v = TermVector::new();
    for t in terms {
        v.add(t, 1.0);
    }
    v
}
