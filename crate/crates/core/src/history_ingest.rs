//! Version-history evidence: log-message vectors, churn counts, change
//! dates, and ground-truth defect-to-file links mined from log messages.
//!
//! History arrives as a neutral changelog export, never via a live VCS:
//! records separated by a `---` line, each with `date:`, `file:` lines and
//! a `message:` section.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;

use crate::code_ingest::SourceDocument;
use crate::error::{Error, Result};
use crate::textkit::{tokenize_plain, TermVector};

/// One commit-level change: the files it touched, its date, its message.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeRecord {
    pub paths: Vec<String>,
    pub date: NaiveDate,
    pub message: String,
}

/// A defect report linked to the files changed to fix it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthLink {
    pub report_id: String,
    pub fixed_paths: Vec<String>,
}

/// Parses the changelog export format. Records are separated by a line
/// containing only `---`; each record holds `date: YYYY-MM-DD`, one or more
/// `file: <path>` lines, then `message:` followed by message lines.
pub fn parse_changelog(text: &str) -> Result<Vec<ChangeRecord>> {
    let mut chunks: Vec<Vec<&str>> = vec![Vec::new()];
    for line in text.lines() {
        if line.trim() == "---" {
            chunks.push(Vec::new());
        } else {
            chunks.last_mut().expect("non-empty").push(line);
        }
    }
    let mut records = Vec::new();
    for (i, chunk) in chunks.iter().enumerate() {
        if chunk.iter().all(|l| l.trim().is_empty()) {
            continue;
        }
        let mut date = None;
        let mut paths = Vec::new();
        let mut message = String::new();
        let mut in_message = false;
        for &line in chunk {
            if in_message {
                if !message.is_empty() {
                    message.push('\n');
                }
                message.push_str(line);
                continue;
            }
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(value) = line.strip_prefix("date:") {
                date = Some(
                    NaiveDate::parse_from_str(value.trim(), "%Y-%m-%d").map_err(|e| {
                        Error::Config(format!("changelog record {}: bad date: {e}", i + 1))
                    })?,
                );
            } else if let Some(value) = line.strip_prefix("file:") {
                paths.push(value.trim().replace('\\', "/"));
            } else if let Some(first) = line.strip_prefix("message:") {
                in_message = true;
                let first = first.trim();
                if !first.is_empty() {
                    message.push_str(first);
                }
            } else {
                return Err(Error::Config(format!(
                    "changelog record {}: unexpected line {line:?}",
                    i + 1
                )));
            }
        }
        let date = date.ok_or_else(|| {
            Error::Config(format!("changelog record {}: missing date", i + 1))
        })?;
        if paths.is_empty() {
            return Err(Error::Config(format!(
                "changelog record {}: no file lines",
                i + 1
            )));
        }
        records.push(ChangeRecord {
            paths,
            date,
            message,
        });
    }
    Ok(records)
}

/// Attaches history to corpus documents: for each document, `log_messages`
/// is rebuilt from the messages of all records touching its path,
/// `change_dates` holds their sorted dates, and `churn` is their count.
/// Re-running replaces previous history rather than accumulating.
///
/// Returns the paths referenced by records but absent from the corpus.
pub fn ingest_changelog(
    records: &[ChangeRecord],
    corpus: &mut [SourceDocument],
) -> Vec<String> {
    let mut by_path: BTreeMap<String, usize> = BTreeMap::new();
    for (i, doc) in corpus.iter().enumerate() {
        by_path.insert(doc.path.clone(), i);
    }
    for doc in corpus.iter_mut() {
        doc.log_messages = TermVector::new();
        doc.change_dates.clear();
        doc.churn = 0;
    }
    let mut unknown = BTreeSet::new();
    for record in records {
        let message_terms = tokenize_plain(&record.message);
        for path in &record.paths {
            match by_path.get(path.as_str()) {
                Some(&i) => {
                    let doc = &mut corpus[i];
                    for t in &message_terms {
                        doc.log_messages.add(t.clone(), 1.0);
                    }
                    doc.change_dates.push(record.date);
                }
                None => {
                    unknown.insert(path.clone());
                }
            }
        }
    }
    for doc in corpus.iter_mut() {
        doc.change_dates.sort();
        doc.churn = doc.change_dates.len() as u32;
    }
    unknown.into_iter().collect()
}

/// How many of a document's recorded changes fall strictly before `cutoff`.
/// With no cutoff the whole history counts.
pub fn churn_before(doc: &SourceDocument, cutoff: Option<NaiveDate>) -> u32 {
    match cutoff {
        Some(d) => doc.change_dates.iter().filter(|&&c| c < d).count() as u32,
        None => doc.churn,
    }
}

const LINK_WORDS: &[&str] = &["bug", "defect", "issue"];

/// Does `message` mention `id` under the id-mention patterns: `#id`, the id
/// within 2 tokens after "bug"/"defect"/"issue", or the bare id as a
/// standalone token when the id is at least 5 digits.
fn mentions_id(message: &str, id: &str) -> bool {
    let mut tokens: Vec<(String, bool)> = Vec::new(); // (token, preceded by '#')
    let mut current = String::new();
    let mut hash = false;
    let mut pending_hash = false;
    for c in message.chars() {
        if c.is_alphanumeric() || c == '_' {
            if current.is_empty() {
                hash = pending_hash;
            }
            current.push(c);
            pending_hash = false;
        } else {
            if !current.is_empty() {
                tokens.push((std::mem::take(&mut current), hash));
            }
            pending_hash = c == '#';
        }
    }
    if !current.is_empty() {
        tokens.push((current, hash));
    }

    let long_numeric = id.len() >= 5 && id.chars().all(|c| c.is_ascii_digit());
    for (i, (tok, hashed)) in tokens.iter().enumerate() {
        if !tok.eq_ignore_ascii_case(id) {
            continue;
        }
        if *hashed || long_numeric {
            return true;
        }
        let window = tokens[i.saturating_sub(2)..i].iter();
        if window
            .map(|(t, _)| t.to_ascii_lowercase())
            .any(|t| LINK_WORDS.contains(&t.as_str()))
        {
            return true;
        }
    }
    false
}

/// Mines ground-truth links: report R is linked iff some record message
/// mentions R's id; `fixed_paths` is the union of matching records' paths
/// restricted to the given source extensions. With `strict`, a fix touching
/// any non-source file drops the whole link.
pub fn mine_links(
    records: &[ChangeRecord],
    report_ids: &[String],
    source_extensions: &[String],
    strict: bool,
) -> Vec<GroundTruthLink> {
    let is_source = |path: &str| -> bool {
        path.rsplit_once('.')
            .map(|(_, ext)| source_extensions.iter().any(|e| e.eq_ignore_ascii_case(ext)))
            .unwrap_or(false)
    };
    let mut links = Vec::new();
    for id in report_ids {
        let mut paths = BTreeSet::new();
        let mut dropped = false;
        for record in records {
            if !mentions_id(&record.message, id) {
                continue;
            }
            if strict && record.paths.iter().any(|p| !is_source(p)) {
                dropped = true;
                continue;
            }
            paths.extend(record.paths.iter().filter(|p| is_source(p)).cloned());
        }
        if !paths.is_empty() && !(strict && dropped) {
            links.push(GroundTruthLink {
                report_id: id.clone(),
                fixed_paths: paths.into_iter().collect(),
            });
        }
    }
    links
}
