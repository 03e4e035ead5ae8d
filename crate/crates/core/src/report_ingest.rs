//! Parsing of defect reports into structured documents.
//!
//! The input format is one report per file: a line-oriented `Key: Value`
//! header (Id, Title, Date, Component, OS, Version; keys case-insensitive),
//! a blank line, then the free-form body. Stack-trace frames found in the
//! body are additionally extracted as an ordered sequence; their terms also
//! remain part of the body vector.

use std::sync::OnceLock;

use chrono::NaiveDate;
use regex::Regex;

use crate::error::{Error, Result};
use crate::textkit::{build_vector, tokenize_code, tokenize_plain, TermVector};

/// One defect report in intermediate form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DefectReport {
    pub id: String,
    pub title: TermVector,
    pub body: TermVector,
    /// Fully-qualified method names, top-of-trace first.
    pub stack_frames: Vec<String>,
    pub component: String,
    pub operating_system: String,
    pub version: String,
    pub submitted: Option<NaiveDate>,
    pub raw_title: String,
    pub raw_body: String,
}

impl DefectReport {
    /// Positional vector over the report's stack frames.
    pub fn trace_vector(&self) -> StackTraceVector {
        trace_vector(&self.stack_frames)
    }
}

/// Term vector in which the frame at 1-based position `i` contributes
/// weight `1/i` to each of its terms.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StackTraceVector {
    pub entries: TermVector,
}

/// A frame line: optional whitespace, optional `at `, a dotted identifier
/// chain ending in a method name, optionally a parenthesized location.
fn frame_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^\s*(?:at\s+)?([A-Za-z_$][\w$]*(?:\.[A-Za-z_$<][\w$<>]*)+)\s*(?:\([^)]*\))?\s*$",
        )
        .expect("frame regex")
    })
}

/// Pulls recognized stack-trace frame lines out of free-form body text,
/// in textual order. Non-trace text is ignored.
pub fn extract_stack_frames(body_text: &str) -> Vec<String> {
    body_text
        .lines()
        .filter_map(|line| {
            frame_regex()
                .captures(line)
                .map(|c| c.get(1).unwrap().as_str().to_string())
        })
        .collect()
}

/// Builds the inverse-positional vector: frame `i` (1-based) adds `1/i` to
/// every term produced by code tokenization of the frame string; repeated
/// terms accumulate.
pub fn trace_vector(frames: &[String]) -> StackTraceVector {
    let mut entries = TermVector::new();
    for (i, frame) in frames.iter().enumerate() {
        let weight = 1.0 / (i as f64 + 1.0);
        for term in tokenize_code(frame) {
            entries.add(term, weight);
        }
    }
    StackTraceVector { entries }
}

/// Parses one report record. The record must carry at least an id and a
/// title; other header fields are optional and default to empty.
pub fn parse_report(record: &str) -> Result<DefectReport> {
    let mut report = DefectReport::default();
    let mut lines = record.lines();
    let mut body = String::new();
    let mut in_header = true;
    for line in lines.by_ref() {
        if in_header {
            if line.trim().is_empty() {
                in_header = false;
                continue;
            }
            let (key, value) = match line.split_once(':') {
                Some(kv) => kv,
                None => {
                    // header without colon: treat as start of body
                    in_header = false;
                    body.push_str(line);
                    body.push('\n');
                    continue;
                }
            };
            let value = value.trim();
            match key.trim().to_ascii_lowercase().as_str() {
                "id" => report.id = value.to_string(),
                "title" => report.raw_title = value.to_string(),
                "date" => {
                    report.submitted =
                        Some(NaiveDate::parse_from_str(value, "%Y-%m-%d").map_err(|e| {
                            Error::MalformedReport {
                                record: report.id.clone(),
                                reason: format!("bad date {value:?}: {e}"),
                            }
                        })?)
                }
                "component" => report.component = value.to_lowercase(),
                "os" => report.operating_system = value.to_lowercase(),
                "version" => report.version = value.to_lowercase(),
                _ => {
                    return Err(Error::MalformedReport {
                        record: report.id.clone(),
                        reason: format!("unknown header key {:?}", key.trim()),
                    })
                }
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    if report.id.is_empty() {
        return Err(Error::MalformedReport {
            record: "<unknown>".into(),
            reason: "missing Id header".into(),
        });
    }
    if report.raw_title.is_empty() {
        return Err(Error::MalformedReport {
            record: report.id.clone(),
            reason: "missing Title header".into(),
        });
    }
    report.raw_body = body;
    report.title = build_vector(tokenize_plain(&report.raw_title));
    report.body = build_vector(tokenize_plain(&report.raw_body));
    report.stack_frames = extract_stack_frames(&report.raw_body);
    Ok(report)
}
