//! Corpus-wide document-frequency statistics, the idf weighting, and
//! persistence of the indexed corpus.
//!
//! One corpus document exists per source file (its whole-file and
//! log-message terms folded together) and one per defect report (title and
//! body terms). idf is the plain ratio `document_count / doc_frequency`;
//! a term absent from the index gets the rarest possible weight,
//! `document_count`.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::code_ingest::SourceDocument;
use crate::error::{Error, Result};
use crate::report_ingest::DefectReport;
use crate::textkit::{Term, TermVector};

const FORMAT_TAG: &str = "textloc-index";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocKind {
    SourceFile,
    DefectReport,
}

impl DocKind {
    fn as_str(self) -> &'static str {
        match self {
            DocKind::SourceFile => "source-file",
            DocKind::DefectReport => "defect-report",
        }
    }

    fn parse(s: &str) -> Result<DocKind> {
        match s {
            "source-file" => Ok(DocKind::SourceFile),
            "defect-report" => Ok(DocKind::DefectReport),
            other => Err(Error::IndexLoad(format!("unknown document kind {other:?}"))),
        }
    }
}

/// Registry row: what went into the corpus and when.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistryEntry {
    pub id: String,
    pub kind: DocKind,
    pub date: Option<NaiveDate>,
}

/// Document counts and per-term document frequencies. Immutable after
/// build; shareable across threads for concurrent queries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusIndex {
    pub document_count: u32,
    doc_frequency: HashMap<Term, u32>,
    pub registry: Vec<RegistryEntry>,
}

impl CorpusIndex {
    pub fn doc_frequency(&self, term: &Term) -> Option<u32> {
        self.doc_frequency.get(term).copied()
    }

    pub fn term_count(&self) -> usize {
        self.doc_frequency.len()
    }

    /// Inverse document frequency of `term`. Errors on an empty index.
    pub fn idf(&self, term: &Term) -> Result<f64> {
        if self.document_count == 0 {
            return Err(Error::Usage("idf queried on an empty index".into()));
        }
        let df = self.doc_frequency.get(term).copied().unwrap_or(1).max(1);
        Ok(f64::from(self.document_count) / f64::from(df))
    }
}

/// Builds the corpus index. Reports dated on or after `cutoff` (or undated,
/// when a cutoff is given) are excluded from the corpus; without a cutoff
/// all reports are included.
pub fn build_index(
    sources: &[SourceDocument],
    reports: &[DefectReport],
    cutoff: Option<NaiveDate>,
) -> CorpusIndex {
    let mut index = CorpusIndex::default();
    let bump = |terms: HashSet<&Term>, index: &mut CorpusIndex| {
        for t in terms {
            *index.doc_frequency.entry(t.clone()).or_insert(0) += 1;
        }
    };
    for doc in sources {
        let terms: HashSet<&Term> = doc.whole_file.terms().chain(doc.log_messages.terms()).collect();
        bump(terms, &mut index);
        index.registry.push(RegistryEntry {
            id: doc.path.clone(),
            kind: DocKind::SourceFile,
            date: doc.change_dates.last().copied(),
        });
    }
    for report in reports {
        if let Some(cut) = cutoff {
            match report.submitted {
                Some(d) if d < cut => {}
                _ => continue,
            }
        }
        let terms: HashSet<&Term> = report.title.terms().chain(report.body.terms()).collect();
        bump(terms, &mut index);
        index.registry.push(RegistryEntry {
            id: report.id.clone(),
            kind: DocKind::DefectReport,
            date: report.submitted,
        });
    }
    index.document_count = index.registry.len() as u32;
    index
}

fn fmt_date(d: Option<NaiveDate>) -> String {
    d.map_or_else(|| "-".to_string(), |d| d.format("%Y-%m-%d").to_string())
}

fn parse_date(s: &str) -> Result<Option<NaiveDate>> {
    if s == "-" {
        return Ok(None);
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(Some)
        .map_err(|e| Error::IndexLoad(format!("bad date {s:?}: {e}")))
}

fn write_vector(out: &mut impl Write, name: &str, v: &TermVector) -> std::io::Result<()> {
    writeln!(out, "vector {name} {}", v.len())?;
    for (term, weight) in v.sorted_entries() {
        // `{}` prints the shortest representation that parses back exactly
        writeln!(out, "{term}\t{weight}")?;
    }
    Ok(())
}

const VECTOR_NAMES: [&str; 7] = [
    "class_names",
    "method_signatures",
    "method_bodies",
    "comments",
    "string_literals",
    "whole_file",
    "log_messages",
];

/// Writes the index and its source documents as versioned, line-delimited
/// UTF-8 text.
pub fn save_index(path: &Path, index: &CorpusIndex, sources: &[SourceDocument]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(out, "{FORMAT_TAG} {FORMAT_VERSION} {}", index.document_count)?;
        writeln!(out, "registry {}", index.registry.len())?;
        for entry in &index.registry {
            writeln!(
                out,
                "{}\t{}\t{}",
                entry.kind.as_str(),
                entry.id,
                fmt_date(entry.date)
            )?;
        }
        let mut terms: Vec<(&Term, u32)> =
            index.doc_frequency.iter().map(|(t, &df)| (t, df)).collect();
        terms.sort_by(|a, b| a.0.cmp(b.0));
        writeln!(out, "terms {}", terms.len())?;
        for (term, df) in terms {
            writeln!(out, "{term}\t{df}")?;
        }
        writeln!(out, "sources {}", sources.len())?;
        for doc in sources {
            writeln!(out, "source {}", doc.path)?;
            writeln!(out, "churn {}", doc.churn)?;
            let dates: Vec<String> = doc
                .change_dates
                .iter()
                .map(|d| d.format("%Y-%m-%d").to_string())
                .collect();
            writeln!(out, "dates {}", dates.join(","))?;
            for (name, v) in VECTOR_NAMES.iter().zip([
                &doc.class_names,
                &doc.method_signatures,
                &doc.method_bodies,
                &doc.comments,
                &doc.string_literals,
                &doc.whole_file,
                &doc.log_messages,
            ]) {
                write_vector(out, name, v)?;
            }
            writeln!(out, "end")?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    lineno: usize,
}

impl<'a> LineReader<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.lineno += 1;
        self.lines
            .next()
            .ok_or_else(|| Error::IndexLoad(format!("truncated at line {}", self.lineno)))
    }

    fn expect_header(&mut self, keyword: &str) -> Result<Vec<&'a str>> {
        let line = self.next()?;
        let mut parts = line.split(' ');
        if parts.next() != Some(keyword) {
            return Err(Error::IndexLoad(format!(
                "line {}: expected `{keyword}`, found {line:?}",
                self.lineno
            )));
        }
        Ok(parts.collect())
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::IndexLoad(format!("line {}: {}", self.lineno, reason.into()))
    }
}

fn parse_count(reader: &LineReader<'_>, s: Option<&str>) -> Result<usize> {
    s.and_then(|s| s.parse().ok())
        .ok_or_else(|| reader.err("bad count"))
}

fn read_vector(reader: &mut LineReader<'_>, name: &str) -> Result<TermVector> {
    let parts = reader.expect_header("vector")?;
    if parts.first() != Some(&name) {
        return Err(reader.err(format!("expected vector {name}")));
    }
    let count = parse_count(reader, parts.get(1).copied())?;
    let mut v = TermVector::new();
    for _ in 0..count {
        let line = reader.next()?;
        let (term, weight) = line
            .split_once('\t')
            .ok_or_else(|| Error::IndexLoad(format!("bad vector entry {line:?}")))?;
        let weight: f64 = weight
            .parse()
            .map_err(|_| Error::IndexLoad(format!("bad weight {weight:?}")))?;
        let term = Term::new(term).ok_or_else(|| Error::IndexLoad("empty term".into()))?;
        v.add(term, weight);
    }
    Ok(v)
}

/// Loads an index file written by [`save_index`]. `load(save(x))` is
/// observably identical to `x`.
pub fn load_index(path: &Path) -> Result<(CorpusIndex, Vec<SourceDocument>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = LineReader {
        lines: text.lines(),
        lineno: 0,
    };

    let header = reader.expect_header(FORMAT_TAG)?;
    let version: u32 = header
        .first()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| reader.err("missing format version"))?;
    if version != FORMAT_VERSION {
        return Err(Error::IndexLoad(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let document_count: u32 = header
        .get(1)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| reader.err("missing document count"))?;

    let mut index = CorpusIndex {
        document_count,
        ..CorpusIndex::default()
    };

    let parts = reader.expect_header("registry")?;
    let count = parse_count(&reader, parts.first().copied())?;
    for _ in 0..count {
        let line = reader.next()?;
        let mut fields = line.split('\t');
        let kind = DocKind::parse(fields.next().unwrap_or(""))?;
        let id = fields
            .next()
            .ok_or_else(|| Error::IndexLoad(format!("bad registry row {line:?}")))?;
        let date = parse_date(fields.next().unwrap_or("-"))?;
        index.registry.push(RegistryEntry {
            id: id.to_string(),
            kind,
            date,
        });
    }
    if index.registry.len() as u32 != document_count {
        return Err(Error::IndexLoad("registry length != document_count".into()));
    }

    let parts = reader.expect_header("terms")?;
    let count = parse_count(&reader, parts.first().copied())?;
    for _ in 0..count {
        let line = reader.next()?;
        let (term, df) = line
            .split_once('\t')
            .ok_or_else(|| Error::IndexLoad(format!("bad term row {line:?}")))?;
        let df: u32 = df
            .parse()
            .map_err(|_| Error::IndexLoad(format!("bad df {df:?}")))?;
        let term = Term::new(term).ok_or_else(|| Error::IndexLoad("empty term".into()))?;
        index.doc_frequency.insert(term, df);
    }

    let parts = reader.expect_header("sources")?;
    let count = parse_count(&reader, parts.first().copied())?;
    let mut sources = Vec::with_capacity(count);
    for _ in 0..count {
        let parts = reader.expect_header("source")?;
        let mut doc = SourceDocument {
            path: parts.join(" "),
            ..SourceDocument::default()
        };
        let parts = reader.expect_header("churn")?;
        doc.churn = parts
            .first()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| reader.err("bad churn"))?;
        let parts = reader.expect_header("dates")?;
        if let Some(dates) = parts.first().filter(|s| !s.is_empty()) {
            for d in dates.split(',') {
                doc.change_dates.push(
                    parse_date(d)?.ok_or_else(|| Error::IndexLoad("bad change date".into()))?,
                );
            }
        }
        doc.class_names = read_vector(&mut reader, "class_names")?;
        doc.method_signatures = read_vector(&mut reader, "method_signatures")?;
        doc.method_bodies = read_vector(&mut reader, "method_bodies")?;
        doc.comments = read_vector(&mut reader, "comments")?;
        doc.string_literals = read_vector(&mut reader, "string_literals")?;
        doc.whole_file = read_vector(&mut reader, "whole_file")?;
        doc.log_messages = read_vector(&mut reader, "log_messages")?;
        if reader.next()? != "end" {
            return Err(reader.err("expected `end`"));
        }
        sources.push(doc);
    }
    Ok((index, sources))
}
