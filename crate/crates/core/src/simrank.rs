//! The similarity metric and weighted rank aggregation.
//!
//! `similarity(v1, v2) = Σ_{t ∈ v1 ∩ v2} v1[t] · v2[t] · idf(t)` over raw,
//! unnormalized weights; a file's rank value is the weighted sum of that
//! metric over (report substructure, code substructure) pairs. The weights
//! are the model: absent pairs contribute nothing.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::code_ingest::SourceDocument;
use crate::error::{Error, Result};
use crate::history_ingest::churn_before;
use crate::index::CorpusIndex;
use crate::report_ingest::DefectReport;
use crate::textkit::{Term, TermVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReportField {
    Title,
    Body,
    StackTrace,
    Component,
    OperatingSystem,
    Version,
    Date,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodeField {
    ClassNames,
    MethodSignatures,
    MethodBodies,
    Comments,
    StringLiterals,
    LogMessages,
    Churn,
}

pub const REPORT_FIELDS: [ReportField; 7] = [
    ReportField::Title,
    ReportField::Body,
    ReportField::StackTrace,
    ReportField::Component,
    ReportField::OperatingSystem,
    ReportField::Version,
    ReportField::Date,
];

pub const CODE_FIELDS: [CodeField; 7] = [
    CodeField::ClassNames,
    CodeField::MethodSignatures,
    CodeField::MethodBodies,
    CodeField::Comments,
    CodeField::StringLiterals,
    CodeField::LogMessages,
    CodeField::Churn,
];

impl ReportField {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportField::Title => "title",
            ReportField::Body => "body",
            ReportField::StackTrace => "stack_trace",
            ReportField::Component => "component",
            ReportField::OperatingSystem => "operating_system",
            ReportField::Version => "version",
            ReportField::Date => "date",
        }
    }
}

impl CodeField {
    pub fn as_str(self) -> &'static str {
        match self {
            CodeField::ClassNames => "class_names",
            CodeField::MethodSignatures => "method_signatures",
            CodeField::MethodBodies => "method_bodies",
            CodeField::Comments => "comments",
            CodeField::StringLiterals => "string_literals",
            CodeField::LogMessages => "log_messages",
            CodeField::Churn => "churn",
        }
    }
}

impl FromStr for ReportField {
    type Err = Error;
    fn from_str(s: &str) -> Result<ReportField> {
        REPORT_FIELDS
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown report field {s:?}")))
    }
}

impl FromStr for CodeField {
    type Err = Error;
    fn from_str(s: &str) -> Result<CodeField> {
        CODE_FIELDS
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown code field {s:?}")))
    }
}

/// One (report substructure, code substructure) comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureKey {
    pub report_field: ReportField,
    pub code_field: CodeField,
}

impl FeatureKey {
    pub fn new(report_field: ReportField, code_field: CodeField) -> FeatureKey {
        FeatureKey {
            report_field,
            code_field,
        }
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.report_field.as_str(), self.code_field.as_str())
    }
}

/// The full 7x7 candidate cross product, in canonical order.
pub fn all_feature_keys() -> Vec<FeatureKey> {
    let mut keys = Vec::with_capacity(49);
    for r in REPORT_FIELDS {
        for c in CODE_FIELDS {
            keys.push(FeatureKey::new(r, c));
        }
    }
    keys
}

/// The model coefficients: a non-negative weight per active pair. Absent
/// keys mean weight zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightModel {
    weights: HashMap<FeatureKey, f64>,
}

impl WeightModel {
    pub fn new() -> WeightModel {
        WeightModel::default()
    }

    pub fn set(&mut self, key: FeatureKey, weight: f64) {
        if weight > 0.0 {
            self.weights.insert(key, weight);
        } else {
            self.weights.remove(&key);
        }
    }

    pub fn get(&self, key: FeatureKey) -> f64 {
        self.weights.get(&key).copied().unwrap_or(0.0)
    }

    pub fn is_usable(&self) -> bool {
        self.weights.values().any(|&w| w > 0.0)
    }

    /// Active (weight, key) pairs in canonical key order.
    pub fn active(&self) -> Vec<(FeatureKey, f64)> {
        let mut v: Vec<_> = self.weights.iter().map(|(&k, &w)| (k, w)).collect();
        v.sort_by_key(|e| e.0);
        v
    }

    pub fn scaled(&self, factor: f64) -> WeightModel {
        let mut m = WeightModel::new();
        for (k, w) in self.active() {
            m.set(k, w * factor);
        }
        m
    }

    /// One weight on a single pair, zero elsewhere.
    pub fn singleton(key: FeatureKey) -> WeightModel {
        let mut m = WeightModel::new();
        m.set(key, 1.0);
        m
    }

    /// Model file format: one `report_field TAB code_field TAB weight` line
    /// per active pair.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (key, weight) in self.active() {
            out.push_str(&format!("{key}\t{weight}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<WeightModel> {
        let mut model = WeightModel::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (r, c, w) = match (fields.next(), fields.next(), fields.next()) {
                (Some(r), Some(c), Some(w)) => (r, c, w),
                _ => {
                    return Err(Error::Config(format!(
                        "model line {}: expected three tab-separated fields",
                        lineno + 1
                    )))
                }
            };
            let weight: f64 = w
                .parse()
                .map_err(|_| Error::Config(format!("model line {}: bad weight {w:?}", lineno + 1)))?;
            if weight < 0.0 {
                return Err(Error::Config(format!(
                    "model line {}: negative weight",
                    lineno + 1
                )));
            }
            model.set(FeatureKey::new(r.parse()?, c.parse()?), weight);
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<WeightModel> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        WeightModel::parse(&text)
    }
}

/// The pairwise similarity sum over shared terms, idf-weighted and
/// deliberately not normalized for document size.
pub fn similarity(v1: &TermVector, v2: &TermVector, index: &CorpusIndex) -> f64 {
    let (small, large) = if v1.len() <= v2.len() { (v1, v2) } else { (v2, v1) };
    let mut total = 0.0;
    for (term, w) in small.iter() {
        let other = large.get(term);
        if other > 0.0 {
            let idf = index.idf(term).unwrap_or(1.0);
            total += w * other * idf;
        }
    }
    total
}

fn categorical_vector(value: &str) -> TermVector {
    let mut v = TermVector::new();
    if let Some(t) = Term::new(value.to_lowercase().replace(char::is_whitespace, "_")) {
        v.add(t, 1.0);
    }
    v
}

/// Similarity for one feature pair. Prose pairs go through [`similarity`];
/// categorical report fields become weight-1 single-term vectors; the stack
/// trace uses its inverse-positional vector; the (date, churn) pair counts
/// the file's changes strictly before the report date. `date` pairs with
/// nothing but `churn`, and `churn` with nothing but `date`.
pub fn feature_similarity(
    report: &DefectReport,
    file: &SourceDocument,
    key: FeatureKey,
    index: &CorpusIndex,
) -> f64 {
    use CodeField as C;
    use ReportField as R;
    match (key.report_field, key.code_field) {
        (R::Date, C::Churn) => f64::from(churn_before(file, report.submitted)),
        (R::Date, _) | (_, C::Churn) => 0.0,
        (report_field, code_field) => {
            let code_vector = match code_field {
                C::ClassNames => &file.class_names,
                C::MethodSignatures => &file.method_signatures,
                C::MethodBodies => &file.method_bodies,
                C::Comments => &file.comments,
                C::StringLiterals => &file.string_literals,
                C::LogMessages => &file.log_messages,
                C::Churn => unreachable!(),
            };
            match report_field {
                R::Title => similarity(&report.title, code_vector, index),
                R::Body => similarity(&report.body, code_vector, index),
                R::StackTrace => similarity(&report.trace_vector().entries, code_vector, index),
                R::Component => similarity(&categorical_vector(&report.component), code_vector, index),
                R::OperatingSystem => {
                    similarity(&categorical_vector(&report.operating_system), code_vector, index)
                }
                R::Version => similarity(&categorical_vector(&report.version), code_vector, index),
                R::Date => unreachable!(),
            }
        }
    }
}

/// A descending ranking of every corpus file, with tie groups preserved for
/// expected-position scoring.
#[derive(Debug, Clone)]
pub struct RankedList {
    entries: Vec<(String, f64)>,
    /// Start index of each tie group; always begins with 0 when non-empty.
    group_starts: Vec<usize>,
}

impl RankedList {
    /// Sorts scored paths by value descending, ties broken by path, and
    /// records groups of equal values.
    pub fn from_scores(mut scores: Vec<(String, f64)>) -> RankedList {
        scores.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        let mut group_starts = Vec::new();
        for (i, entry) in scores.iter().enumerate() {
            if i == 0 || entry.1 != scores[i - 1].1 {
                group_starts.push(i);
            }
        }
        RankedList {
            entries: scores,
            group_starts,
        }
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tie groups as index ranges over `entries`.
    pub fn tie_groups(&self) -> Vec<std::ops::Range<usize>> {
        (0..self.group_starts.len())
            .map(|g| {
                let start = self.group_starts[g];
                let end = self
                    .group_starts
                    .get(g + 1)
                    .copied()
                    .unwrap_or(self.entries.len());
                start..end
            })
            .collect()
    }

    /// The tie group containing entry index `i`.
    pub fn group_of(&self, i: usize) -> std::ops::Range<usize> {
        let g = match self.group_starts.binary_search(&i) {
            Ok(g) => g,
            Err(g) => g - 1,
        };
        let start = self.group_starts[g];
        let end = self
            .group_starts
            .get(g + 1)
            .copied()
            .unwrap_or(self.entries.len());
        start..end
    }

    pub fn position_of(&self, path: &str) -> Option<usize> {
        self.entries.iter().position(|(p, _)| p == path)
    }
}

/// Ranks every corpus file against `report` under `model`. Requires a
/// usable model and a non-empty corpus.
pub fn rank(
    report: &DefectReport,
    corpus: &[SourceDocument],
    model: &WeightModel,
    index: &CorpusIndex,
) -> Result<RankedList> {
    if corpus.is_empty() {
        return Err(Error::Usage("rank requires a non-empty corpus".into()));
    }
    let active = model.active();
    let scores: Vec<(String, f64)> = corpus
        .par_iter()
        .map(|file| {
            let value: f64 = active
                .iter()
                .map(|&(key, c)| c * feature_similarity(report, file, key, index))
                .sum();
            (file.path.clone(), value)
        })
        .collect();
    Ok(RankedList::from_scores(scores))
}
