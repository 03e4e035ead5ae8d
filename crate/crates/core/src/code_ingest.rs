//! Lexical decomposition of source files into substructure term vectors.
//!
//! No compiler or AST is involved: a byte-level state machine classifies
//! every position as code, comment, or string literal, and line-oriented
//! heuristics pick out method signatures and class names. The set of
//! recognized comment/string delimiters comes from a [`LanguageProfile`],
//! which keeps the pipeline language-independent.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::textkit::{build_vector, tokenize_code, TermVector};

/// Comment and string syntax for one family of languages.
#[derive(Debug, Clone)]
pub struct LanguageProfile {
    pub name: String,
    pub line_comment_markers: Vec<String>,
    pub block_comment_delimiters: Vec<(String, String)>,
    pub string_delimiters: Vec<char>,
    pub file_extensions: Vec<String>,
}

impl LanguageProfile {
    pub fn java_like() -> LanguageProfile {
        LanguageProfile {
            name: "java".into(),
            line_comment_markers: vec!["//".into()],
            block_comment_delimiters: vec![("/*".into(), "*/".into())],
            string_delimiters: vec!['"', '\''],
            file_extensions: vec!["java".into()],
        }
    }

    pub fn c_like() -> LanguageProfile {
        LanguageProfile {
            name: "c".into(),
            line_comment_markers: vec!["//".into()],
            block_comment_delimiters: vec![("/*".into(), "*/".into())],
            string_delimiters: vec!['"', '\''],
            file_extensions: vec![
                "c".into(),
                "cc".into(),
                "cpp".into(),
                "cxx".into(),
                "h".into(),
                "hpp".into(),
                "hxx".into(),
            ],
        }
    }

    /// Profiles shipped with the tool.
    pub fn builtin() -> Vec<LanguageProfile> {
        vec![LanguageProfile::java_like(), LanguageProfile::c_like()]
    }

    pub fn matches_extension(&self, ext: &str) -> bool {
        self.file_extensions.iter().any(|e| e.eq_ignore_ascii_case(ext))
    }

    fn validate(&self) -> Result<()> {
        let empty = self.line_comment_markers.iter().any(String::is_empty)
            || self
                .block_comment_delimiters
                .iter()
                .any(|(o, c)| o.is_empty() || c.is_empty());
        if empty {
            return Err(Error::Config(format!(
                "profile '{}' has an empty comment delimiter",
                self.name
            )));
        }
        Ok(())
    }

    /// Parses a plain-text profile: one `key = value` pair per line.
    ///
    /// Keys: `name`, `line_comment`, `block_comment` (open and close separated
    /// by whitespace), `string` (delimiter characters), `extension`
    /// (repeatable or comma-separated). `#` starts a comment line.
    pub fn parse_config(text: &str, origin: &str) -> Result<LanguageProfile> {
        let mut profile = LanguageProfile {
            name: origin.to_string(),
            line_comment_markers: Vec::new(),
            block_comment_delimiters: Vec::new(),
            string_delimiters: Vec::new(),
            file_extensions: Vec::new(),
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{origin}:{}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "name" => profile.name = value.to_string(),
                "line_comment" => profile.line_comment_markers.push(value.to_string()),
                "block_comment" => {
                    let mut parts = value.split_whitespace();
                    match (parts.next(), parts.next()) {
                        (Some(open), Some(close)) => profile
                            .block_comment_delimiters
                            .push((open.to_string(), close.to_string())),
                        _ => {
                            return Err(Error::Config(format!(
                                "{origin}:{}: block_comment needs open and close delimiters",
                                lineno + 1
                            )))
                        }
                    }
                }
                "string" => profile
                    .string_delimiters
                    .extend(value.split_whitespace().flat_map(|s| s.chars())),
                "extension" => profile
                    .file_extensions
                    .extend(value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty())),
                other => {
                    return Err(Error::Config(format!(
                        "{origin}:{}: unknown profile key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        profile.validate()?;
        Ok(profile)
    }

    pub fn from_config_file(path: &Path) -> Result<LanguageProfile> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LanguageProfile::parse_config(&text, &path.display().to_string())
    }
}

/// One source file decomposed into substructure vectors plus history fields.
/// `log_messages`, `churn`, and `change_dates` stay empty until history
/// ingestion attaches them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceDocument {
    pub path: String,
    pub class_names: TermVector,
    pub method_signatures: TermVector,
    pub method_bodies: TermVector,
    pub comments: TermVector,
    pub string_literals: TermVector,
    pub whole_file: TermVector,
    pub log_messages: TermVector,
    pub churn: u32,
    pub change_dates: Vec<NaiveDate>,
}

impl SourceDocument {
    /// File name without its extension.
    pub fn stem(&self) -> &str {
        let name = self.path.rsplit('/').next().unwrap_or(&self.path);
        name.rsplit_once('.').map_or(name, |(s, _)| s)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum ByteClass {
    Code,
    Comment,
    Str,
}

/// Classifies every byte as code, comment, or string-literal content.
/// Escaped quotes do not terminate literals; the first closing delimiter
/// ends a block comment (no nesting).
fn classify(text: &str, profile: &LanguageProfile) -> Vec<ByteClass> {
    let bytes = text.as_bytes();
    let n = bytes.len();
    let mut class = vec![ByteClass::Code; n];
    let mut i = 0;
    'outer: while i < n {
        for marker in &profile.line_comment_markers {
            if bytes[i..].starts_with(marker.as_bytes()) {
                let end = bytes[i..]
                    .iter()
                    .position(|&b| b == b'\n')
                    .map_or(n, |p| i + p);
                class[i..end].fill(ByteClass::Comment);
                i = end;
                continue 'outer;
            }
        }
        for (open, close) in &profile.block_comment_delimiters {
            if bytes[i..].starts_with(open.as_bytes()) {
                let body_start = i + open.len();
                let end = bytes[body_start..]
                    .windows(close.len().max(1))
                    .position(|w| w == close.as_bytes())
                    .map_or(n, |p| body_start + p + close.len());
                for b in class.iter_mut().take(end).skip(i) {
                    *b = ByteClass::Comment;
                }
                i = end;
                continue 'outer;
            }
        }
        for &delim in &profile.string_delimiters {
            if delim.is_ascii() && bytes[i] == delim as u8 {
                let mut j = i + 1;
                while j < n {
                    match bytes[j] {
                        b'\\' => j += 2,
                        b if b == delim as u8 => break,
                        _ => j += 1,
                    }
                }
                let end = (j + 1).min(n);
                class[i..end].fill(ByteClass::Str);
                i = end;
                continue 'outer;
            }
        }
        i += 1;
    }
    // Newlines stay code so line structure survives masking.
    for (k, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            class[k] = ByteClass::Code;
        }
    }
    class
}

fn masked(text: &str, class: &[ByteClass], keep: ByteClass) -> String {
    let out: Vec<u8> = text
        .as_bytes()
        .iter()
        .zip(class)
        .map(|(&b, &c)| if c == keep || b == b'\n' { b } else { b' ' })
        .collect();
    String::from_utf8_lossy(&out).into_owned()
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

const CONTROL_KEYWORDS: &[&str] = &["if", "for", "while", "switch", "catch", "return", "else", "do"];
const NON_TYPE_KEYWORDS: &[&str] = &["new", "return", "throw", "else", "case", "goto"];

fn first_word(line: &[u8]) -> Option<&[u8]> {
    let start = line.iter().position(|&b| is_word_byte(b))?;
    if line[..start].iter().any(|&b| b != b' ' && b != b'\t') {
        return None; // punctuation before the first word
    }
    let end = line[start..]
        .iter()
        .position(|&b| !is_word_byte(b))
        .map_or(line.len(), |p| start + p);
    Some(&line[start..end])
}

/// Marks signature regions in masked code: a word immediately followed by
/// `(` whose paren group (possibly wrapped over lines) closes with `)` then
/// `{` or `;`, where the word is preceded by another identifier-like token
/// (a type or modifier) so bare calls and control statements do not match.
fn mark_signatures(code: &str) -> Vec<bool> {
    let bytes = code.as_bytes();
    let n = bytes.len();
    let mut sig = vec![false; n];
    let mut line_start = 0;
    while line_start < n {
        let line_end = bytes[line_start..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(n, |p| line_start + p);
        let line = &bytes[line_start..line_end];
        let skip_line = match first_word(line) {
            Some(w) => {
                let w = std::str::from_utf8(w).unwrap_or("");
                CONTROL_KEYWORDS.contains(&w)
            }
            None => false,
        };
        let mut advanced = false;
        if !skip_line {
            let mut k = 0;
            while k < line.len() {
                if !is_word_byte(line[k]) {
                    k += 1;
                    continue;
                }
                let word_start = k;
                while k < line.len() && is_word_byte(line[k]) {
                    k += 1;
                }
                if k >= line.len() || line[k] != b'(' {
                    continue;
                }
                if !preceded_by_type_token(line, word_start) {
                    continue;
                }
                let open_abs = line_start + k;
                if let Some(close_abs) = match_paren(bytes, open_abs) {
                    let mut after = close_abs + 1;
                    while after < n && bytes[after].is_ascii_whitespace() {
                        after += 1;
                    }
                    if after < n && (bytes[after] == b'{' || bytes[after] == b';') {
                        sig[line_start..=close_abs].fill(true);
                        line_start = close_abs + 1;
                        advanced = true;
                        break;
                    }
                }
            }
        }
        if !advanced {
            line_start = line_end + 1;
        }
    }
    sig
}

/// The candidate method name must follow a type-ish token: an identifier
/// (not `new`/`return`/...), a closing angle bracket, or `]`.
fn preceded_by_type_token(line: &[u8], word_start: usize) -> bool {
    let mut p = word_start;
    while p > 0 && (line[p - 1] == b' ' || line[p - 1] == b'\t') {
        p -= 1;
    }
    if p == 0 {
        return false;
    }
    match line[p - 1] {
        b'>' | b']' => true,
        b if is_word_byte(b) => {
            let mut s = p - 1;
            while s > 0 && is_word_byte(line[s - 1]) {
                s -= 1;
            }
            let tok = std::str::from_utf8(&line[s..p]).unwrap_or("");
            !NON_TYPE_KEYWORDS.contains(&tok)
        }
        _ => false,
    }
}

fn match_paren(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (k, &b) in bytes.iter().enumerate().skip(open) {
        match b {
            b'(' => depth += 1,
            b')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(k);
                }
            }
            _ => {}
        }
    }
    None
}

const CLASS_KEYWORDS: &[&str] = &["class", "interface", "enum", "struct"];

/// Identifiers declared after `class`/`interface`/`enum`/`struct`.
fn declared_class_names(code: &str) -> Vec<String> {
    let mut names = Vec::new();
    let mut expect_name = false;
    for word in code.split(|c: char| !c.is_alphanumeric() && c != '_') {
        if word.is_empty() {
            continue;
        }
        if expect_name {
            if word.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_') {
                names.push(word.to_string());
            }
            expect_name = false;
        }
        if CLASS_KEYWORDS.contains(&word) {
            expect_name = true;
        }
    }
    names
}

/// Decomposes one source file. History fields start empty; `whole_file` is
/// built from the full text so it always covers every substructure.
pub fn parse_source(text: &str, profile: &LanguageProfile, path: &str) -> SourceDocument {
    let class = classify(text, profile);
    let comment_text = masked(text, &class, ByteClass::Comment);
    let string_text = masked(text, &class, ByteClass::Str);
    let code_text = masked(text, &class, ByteClass::Code);

    let sig_mask = mark_signatures(&code_text);
    let code_bytes = code_text.as_bytes();
    let mut sig_text = Vec::with_capacity(code_bytes.len());
    let mut body_text = Vec::with_capacity(code_bytes.len());
    for (k, &b) in code_bytes.iter().enumerate() {
        let in_sig = sig_mask.get(k).copied().unwrap_or(false);
        sig_text.push(if in_sig || b == b'\n' { b } else { b' ' });
        body_text.push(if !in_sig || b == b'\n' { b } else { b' ' });
    }
    let sig_text = String::from_utf8_lossy(&sig_text).into_owned();
    let body_text = String::from_utf8_lossy(&body_text).into_owned();

    let mut doc = SourceDocument {
        path: path.to_string(),
        ..SourceDocument::default()
    };
    doc.comments = build_vector(tokenize_code(&comment_text));
    doc.string_literals = build_vector(tokenize_code(&string_text));
    doc.method_signatures = build_vector(tokenize_code(&sig_text));
    doc.method_bodies = build_vector(tokenize_code(&body_text));
    doc.whole_file = build_vector(tokenize_code(text));

    let mut class_tokens = tokenize_code(doc.stem());
    for name in declared_class_names(&code_text) {
        class_tokens.extend(tokenize_code(&name));
    }
    doc.class_names = build_vector(class_tokens);
    doc
}

/// Result of walking a corpus tree: parsed documents in path order plus the
/// files that had to be skipped.
#[derive(Debug, Default)]
pub struct ScanResult {
    pub documents: Vec<SourceDocument>,
    pub skipped: Vec<(PathBuf, String)>,
}

/// Parses every file under `root` whose extension matches a profile.
/// Documents come back in deterministic path-sorted order; paths are stored
/// relative to `root` with `/` separators.
pub fn scan_tree(root: &Path, profiles: &[LanguageProfile]) -> Result<ScanResult> {
    if !root.is_dir() {
        return Err(Error::Config(format!(
            "corpus root {} is not a directory",
            root.display()
        )));
    }
    let mut targets: Vec<(PathBuf, usize)> = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Config(format!("walking {}: {e}", root.display())))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let ext = match entry.path().extension().and_then(|e| e.to_str()) {
            Some(e) => e,
            None => continue,
        };
        if let Some(idx) = profiles.iter().position(|p| p.matches_extension(ext)) {
            targets.push((entry.into_path(), idx));
        }
    }

    let parsed: Vec<std::result::Result<SourceDocument, (PathBuf, String)>> = targets
        .par_iter()
        .map(|(path, idx)| {
            let rel = path
                .strip_prefix(root)
                .unwrap_or(path)
                .to_string_lossy()
                .replace('\\', "/");
            match fs::read(path) {
                Ok(bytes) => {
                    let text = String::from_utf8_lossy(&bytes);
                    Ok(parse_source(&text, &profiles[*idx], &rel))
                }
                Err(e) => Err((path.clone(), e.to_string())),
            }
        })
        .collect();

    let mut result = ScanResult::default();
    for item in parsed {
        match item {
            Ok(doc) => result.documents.push(doc),
            Err(skip) => result.skipped.push(skip),
        }
    }
    result.documents.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(result)
}
