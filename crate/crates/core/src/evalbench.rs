//! Evaluation machinery: the *score* metric, three lightweight baselines,
//! the word-replacement degradation protocol, singleton (leave-one-in)
//! analysis, and Pearson correlation for surface features.
//!
//! *score* is the percentage of corpus files that need not be inspected
//! before the first fixed file is reached. A fixed file inside a tie group
//! of size `g` with `m` fixed members takes expected 1-based position
//! `preceding + (g+1)/(m+1)`, the mean over uniformly random orderings of
//! the group.

use std::collections::HashSet;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::code_ingest::SourceDocument;
use crate::error::{Error, Result};
use crate::history_ingest::{churn_before, GroundTruthLink};
use crate::index::CorpusIndex;
use crate::report_ingest::{extract_stack_frames, DefectReport};
use crate::simrank::{rank, FeatureKey, RankedList, WeightModel};
use crate::textkit::{build_vector, tokenize_plain, Term};

/// Per-defect and aggregate *score* values.
#[derive(Debug, Clone)]
pub struct ScoreResult {
    /// (report id, score) per evaluated defect.
    pub per_defect: Vec<(String, f64)>,
    /// Arithmetic mean of the per-defect scores.
    pub mean: f64,
}

impl ScoreResult {
    pub fn defect_count(&self) -> usize {
        self.per_defect.len()
    }
}

/// Expected 1-based position of the first fixed file in `ranked`.
pub fn expected_first_fixed_position(ranked: &RankedList, fixed: &HashSet<&str>) -> Result<f64> {
    let first = ranked
        .entries()
        .iter()
        .position(|(p, _)| fixed.contains(p.as_str()))
        .ok_or_else(|| Error::Usage("no fixed file present in the ranked list".into()))?;
    let group = ranked.group_of(first);
    let g = group.len() as f64;
    let m = ranked.entries()[group.clone()]
        .iter()
        .filter(|(p, _)| fixed.contains(p.as_str()))
        .count() as f64;
    Ok(group.start as f64 + (g + 1.0) / (m + 1.0))
}

/// The *score* of a ranking: `100 * (total - inspected) / total` where
/// `inspected` is the expected position of the first fixed file.
pub fn score(ranked: &RankedList, fixed: &[String], total: usize) -> Result<f64> {
    if fixed.is_empty() {
        return Err(Error::Usage("score requires at least one fixed file".into()));
    }
    let fixed_set: HashSet<&str> = fixed.iter().map(String::as_str).collect();
    for path in &fixed_set {
        if ranked.position_of(path).is_none() {
            return Err(Error::Usage(format!(
                "fixed file {path} is missing from the ranked list"
            )));
        }
    }
    let inspected = expected_first_fixed_position(ranked, &fixed_set)?;
    Ok(100.0 * (total as f64 - inspected) / total as f64)
}

/// Mean *score* of `model` over all linked defects.
pub fn evaluate(
    model: &WeightModel,
    defects: &[(DefectReport, GroundTruthLink)],
    corpus: &[SourceDocument],
    index: &CorpusIndex,
) -> Result<ScoreResult> {
    if defects.is_empty() {
        return Err(Error::Usage("evaluate requires at least one defect".into()));
    }
    let per_defect: Vec<(String, f64)> = defects
        .par_iter()
        .map(|(report, link)| {
            let ranked = rank(report, corpus, model, index)?;
            let s = score(&ranked, &link.fixed_paths, corpus.len())?;
            Ok((report.id.clone(), s))
        })
        .collect::<Result<_>>()?;
    let mean = per_defect.iter().map(|(_, s)| s).sum::<f64>() / per_defect.len() as f64;
    Ok(ScoreResult { per_defect, mean })
}

/// Ranks files by number of changes up to the report date, descending;
/// never-changed files form one trailing tie group.
pub fn baseline_churn(report: &DefectReport, corpus: &[SourceDocument]) -> RankedList {
    let scores = corpus
        .iter()
        .map(|doc| {
            (
                doc.path.clone(),
                f64::from(churn_before(doc, report.submitted)),
            )
        })
        .collect();
    RankedList::from_scores(scores)
}

/// The class identifier of a dotted frame chain: the segment before the
/// trailing method name.
fn frame_class(frame: &str) -> Option<&str> {
    let mut segments: Vec<&str> = frame.split('.').collect();
    segments.pop()?; // method name
    segments.pop()
}

/// Does `frame` name `doc`? True when the frame's class token equals the
/// file stem or one of the file's declared class names.
fn frame_matches(frame: &str, doc: &SourceDocument) -> bool {
    match frame_class(frame) {
        Some(class) => {
            let class = class.to_lowercase();
            doc.stem().eq_ignore_ascii_case(&class)
                || Term::new(class).is_some_and(|t| doc.class_names.contains(&t))
        }
        None => false,
    }
}

/// Ranks files named in the report's stack trace by earliest frame
/// position; all unmentioned files are one trailing tie group.
pub fn baseline_stacktrace(report: &DefectReport, corpus: &[SourceDocument]) -> RankedList {
    let frames = &report.stack_frames;
    let scores = corpus
        .iter()
        .map(|doc| {
            let value = frames
                .iter()
                .position(|f| frame_matches(f, doc))
                .map_or(0.0, |pos| (frames.len() - pos) as f64);
            (doc.path.clone(), value)
        })
        .collect();
    RankedList::from_scores(scores)
}

/// Ranking induced by searching for one term: files ordered by occurrence
/// count descending, non-containing files one trailing tie group.
pub fn term_search_ranking(term: &Term, corpus: &[SourceDocument]) -> RankedList {
    let scores = corpus
        .iter()
        .map(|doc| (doc.path.clone(), doc.whole_file.get(term)))
        .collect();
    RankedList::from_scores(scores)
}

/// Oracle-assisted search baseline: tries every distinct report term and
/// returns the best-scoring one with its *score*. Reports with no terms
/// fall back to a single all-tie group.
pub fn baseline_optimal_search(
    report: &DefectReport,
    corpus: &[SourceDocument],
    fixed: &[String],
) -> Result<(Option<Term>, f64)> {
    let mut terms: Vec<&Term> = report.title.terms().chain(report.body.terms()).collect();
    terms.sort();
    terms.dedup();
    let total = corpus.len();
    let mut best: Option<(Option<Term>, f64)> = None;
    for term in terms {
        let ranked = term_search_ranking(term, corpus);
        let s = score(&ranked, fixed, total)?;
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((Some(term.clone()), s));
        }
    }
    match best {
        Some(b) => Ok(b),
        None => {
            let all_tie =
                RankedList::from_scores(corpus.iter().map(|d| (d.path.clone(), 0.0)).collect());
            Ok((None, score(&all_tie, fixed, total)?))
        }
    }
}

/// Word-replacement strategy for the degradation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegradationMode {
    /// Replacements drawn from the pool of all report-description terms.
    SameCorpus,
    /// Replacements drawn from a supplied wordlist.
    Dictionary,
    /// Random lowercase strings of identical length.
    RandomChars,
}

impl DegradationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DegradationMode::SameCorpus => "same-corpus",
            DegradationMode::Dictionary => "dictionary",
            DegradationMode::RandomChars => "random-chars",
        }
    }

    pub const ALL: [DegradationMode; 3] = [
        DegradationMode::SameCorpus,
        DegradationMode::Dictionary,
        DegradationMode::RandomChars,
    ];
}

impl FromStr for DegradationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<DegradationMode> {
        match s {
            "same-corpus" => Ok(DegradationMode::SameCorpus),
            "dictionary" => Ok(DegradationMode::Dictionary),
            "random-chars" => Ok(DegradationMode::RandomChars),
            other => Err(Error::Config(format!("unknown degradation mode {other:?}"))),
        }
    }
}

/// Replacement sources for [`degrade`].
#[derive(Debug, Clone, Default)]
pub struct DegradeContext {
    /// Pool of all report-description terms in the corpus.
    pub report_term_pool: Vec<Term>,
    /// Wordlist for dictionary mode.
    pub wordlist: Option<Vec<Term>>,
}

impl DegradeContext {
    /// Builds the same-corpus replacement pool from a set of reports.
    pub fn from_reports(reports: &[DefectReport]) -> DegradeContext {
        let mut pool: Vec<Term> = reports
            .iter()
            .flat_map(|r| r.title.terms().chain(r.body.terms()).cloned())
            .collect();
        pool.sort();
        pool.dedup();
        DegradeContext {
            report_term_pool: pool,
            wordlist: None,
        }
    }

    pub fn with_wordlist(mut self, words: Vec<Term>) -> DegradeContext {
        self.wordlist = Some(words);
        self
    }
}

fn random_lowercase(rng: &mut impl Rng, len: usize) -> String {
    (0..len.max(1))
        .map(|_| char::from(rng.gen_range(b'a'..=b'z')))
        .collect()
}

/// Rewrites text token-by-token: every token whose lowercase form has a
/// replacement is substituted, everything else is kept verbatim.
fn rewrite_tokens(text: &str, replacement: &impl Fn(&str) -> Option<String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        if !word.is_empty() {
            match replacement(&word.to_lowercase()) {
                Some(r) => out.push_str(&r),
                None => out.push_str(word),
            }
            word.clear();
        }
    };
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    out
}

/// Replaces a uniformly random `ceil(fraction * n)`-subset of the `n`
/// distinct title+body terms, then re-derives the report from the rewritten
/// raw text. Deterministic under `seed`.
pub fn degrade(
    report: &DefectReport,
    fraction: f64,
    mode: DegradationMode,
    ctx: &DegradeContext,
    seed: u64,
) -> Result<DefectReport> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Usage(format!("fraction {fraction} outside [0, 1]")));
    }
    if mode == DegradationMode::Dictionary && ctx.wordlist.as_ref().is_none_or(Vec::is_empty) {
        return Err(Error::Config(
            "dictionary degradation mode requires a wordlist".into(),
        ));
    }
    let mut distinct: Vec<Term> = report.title.terms().chain(report.body.terms()).cloned().collect();
    distinct.sort();
    distinct.dedup();
    let n = distinct.len();
    let k = (fraction * n as f64).ceil() as usize;
    if k == 0 || n == 0 {
        return Ok(report.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let originals: HashSet<&Term> = distinct.iter().collect();
    let mut selected = distinct.clone();
    selected.shuffle(&mut rng);
    selected.truncate(k);

    let mut mapping: std::collections::HashMap<String, String> = Default::default();
    for term in &selected {
        let replacement = match mode {
            DegradationMode::SameCorpus => {
                let pool = &ctx.report_term_pool;
                if pool.is_empty() {
                    return Err(Error::Config("same-corpus mode requires a term pool".into()));
                }
                pool[rng.gen_range(0..pool.len())].as_str().to_string()
            }
            DegradationMode::Dictionary => {
                let words = ctx.wordlist.as_ref().expect("checked above");
                words[rng.gen_range(0..words.len())].as_str().to_string()
            }
            DegradationMode::RandomChars => {
                let len = term.as_str().chars().count();
                loop {
                    let candidate = random_lowercase(&mut rng, len);
                    let as_term = Term::new(candidate.clone()).expect("non-empty");
                    if !originals.contains(&as_term) {
                        break candidate;
                    }
                }
            }
        };
        mapping.insert(term.as_str().to_string(), replacement);
    }

    let replace = |word: &str| mapping.get(word).cloned();
    let mut degraded = report.clone();
    degraded.raw_title = rewrite_tokens(&report.raw_title, &replace);
    degraded.raw_body = rewrite_tokens(&report.raw_body, &replace);
    degraded.title = build_vector(tokenize_plain(&degraded.raw_title));
    degraded.body = build_vector(tokenize_plain(&degraded.raw_body));
    degraded.stack_frames = extract_stack_frames(&degraded.raw_body);
    Ok(degraded)
}

/// Leave-one-in analysis: each key evaluated with weight 1 on that key and
/// 0 elsewhere.
pub fn singleton_analysis(
    keys: &[FeatureKey],
    defects: &[(DefectReport, GroundTruthLink)],
    corpus: &[SourceDocument],
    index: &CorpusIndex,
) -> Result<Vec<(FeatureKey, f64)>> {
    keys.iter()
        .map(|&key| {
            let result = evaluate(&WeightModel::singleton(key), defects, corpus, index)?;
            Ok((key, result.mean))
        })
        .collect()
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Usage(
            "pearson requires two equal-length series of at least 2 points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x).powi(2);
        var_y += (y - mean_y).powi(2);
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(Error::Usage(
            "pearson is undefined for a zero-variance series".into(),
        ));
    }
    Ok(cov / (var_x.sqrt() * var_y.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_ingest::{parse_source, LanguageProfile};
    use crate::index::build_index;
    use crate::report_ingest::parse_report;
    use chrono::NaiveDate;

    fn tied_list(n: usize) -> RankedList {
        RankedList::from_scores((0..n).map(|i| (format!("f{i}"), 0.0)).collect())
    }

    fn strict_list(paths: &[&str]) -> RankedList {
        let n = paths.len();
        RankedList::from_scores(
            paths
                .iter()
                .enumerate()
                .map(|(i, p)| (p.to_string(), (n - i) as f64))
                .collect(),
        )
    }

    #[test]
    fn score_large_corpus_worked_example() {
        // 9992 files, first fixed file at position 2000
        let paths: Vec<String> = (0..9992).map(|i| format!("f{i:05}")).collect();
        let ranked = RankedList::from_scores(
            paths
                .iter()
                .enumerate()
                .map(|(i, p)| (p.clone(), (9992 - i) as f64))
                .collect(),
        );
        let fixed = vec![ranked.entries()[1999].0.clone()];
        let s = score(&ranked, &fixed, 9992).unwrap();
        assert!((s - 100.0 * (9992.0 - 2000.0) / 9992.0).abs() < 1e-9);
        assert_eq!(s.round(), 80.0);
    }

    #[test]
    fn score_first_ranked() {
        let ranked = strict_list(&["a", "b", "c", "d"]);
        let s = score(&ranked, &["a".to_string()], 4).unwrap();
        assert!((s - 100.0 * 3.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn score_single_tie_group() {
        // 10 files all tied, 1 fixed: expected position 5.5, score 45
        let ranked = tied_list(10);
        let fixed = vec!["f3".to_string()];
        assert!((score(&ranked, &fixed, 10).unwrap() - 45.0).abs() < 1e-12);
    }

    #[test]
    fn score_missing_fixed_errors() {
        let ranked = strict_list(&["a", "b"]);
        assert!(score(&ranked, &["zz".to_string()], 2).is_err());
        assert!(score(&ranked, &[], 2).is_err());
    }

    /// Brute-force expected position of the first fixed file over all
    /// orderings of a tie group.
    fn brute_force_tie_expectation(preceding: usize, g: usize, fixed_slots: usize) -> f64 {
        fn permutations(items: &[bool]) -> Vec<Vec<bool>> {
            if items.is_empty() {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for i in 0..items.len() {
                let mut rest = items.to_vec();
                let head = rest.remove(i);
                for mut tail in permutations(&rest) {
                    tail.insert(0, head);
                    out.push(tail);
                }
            }
            out
        }
        let mut slots = vec![false; g];
        for s in slots.iter_mut().take(fixed_slots) {
            *s = true;
        }
        let perms = permutations(&slots);
        let total: f64 = perms
            .iter()
            .map(|perm| {
                let first = perm.iter().position(|&b| b).unwrap();
                (preceding + first + 1) as f64
            })
            .sum();
        total / perms.len() as f64
    }

    #[test]
    fn tie_expectation_matches_brute_force() {
        for g in 1..=6 {
            for m in 1..=g {
                let expected = brute_force_tie_expectation(3, g, m);
                let closed_form = 3.0 + (g as f64 + 1.0) / (m as f64 + 1.0);
                assert!(
                    (expected - closed_form).abs() < 1e-9,
                    "g={g} m={m}: {expected} vs {closed_form}"
                );
            }
        }
    }

    fn report(id: &str, title: &str, date: &str, body: &str) -> DefectReport {
        parse_report(&format!("Id: {id}\nTitle: {title}\nDate: {date}\n\n{body}\n")).unwrap()
    }

    fn corpus_of(texts: &[(&str, &str)]) -> Vec<SourceDocument> {
        let profile = LanguageProfile::java_like();
        texts
            .iter()
            .map(|(path, text)| parse_source(text, &profile, path))
            .collect()
    }

    #[test]
    fn evaluate_single_defect() {
        let corpus = corpus_of(&[
            ("Hit.java", "class Hit { void uncommonword() {} }"),
            ("A.java", "class A {}"),
            ("B.java", "class B {}"),
            ("C.java", "class C {}"),
            ("D.java", "class D {}"),
            ("E.java", "class E {}"),
            ("F.java", "class F {}"),
            ("G.java", "class G {}"),
            ("H.java", "class H {}"),
            ("I.java", "class I {}"),
        ]);
        let index = build_index(&corpus, &[], None);
        let defect = (
            report("1", "uncommonword failure", "2005-01-01", "it broke"),
            GroundTruthLink {
                report_id: "1".into(),
                fixed_paths: vec!["Hit.java".into()],
            },
        );
        let model = WeightModel::singleton(FeatureKey::new(
            crate::simrank::ReportField::Title,
            crate::simrank::CodeField::MethodSignatures,
        ));
        let result = evaluate(&model, &[defect], &corpus, &index).unwrap();
        assert_eq!(result.defect_count(), 1);
        assert!((result.mean - 90.0).abs() < 1e-12);
    }

    #[test]
    fn all_zero_model_near_fifty() {
        let n = 50;
        let corpus: Vec<SourceDocument> = (0..n)
            .map(|i| {
                parse_source(
                    "class X {}",
                    &LanguageProfile::java_like(),
                    &format!("f{i:02}.java"),
                )
            })
            .collect();
        let index = build_index(&corpus, &[], None);
        let defects = vec![(
            report("1", "anything", "2005-01-01", "text"),
            GroundTruthLink {
                report_id: "1".into(),
                fixed_paths: vec!["f07.java".into()],
            },
        )];
        // weight on a pair with no signal: every file ties at zero
        let model = WeightModel::singleton(FeatureKey::new(
            crate::simrank::ReportField::Version,
            crate::simrank::CodeField::LogMessages,
        ));
        let result = evaluate(&model, &defects, &corpus, &index).unwrap();
        let expectation = 100.0 * (n as f64 - (n as f64 + 1.0) / 2.0) / n as f64;
        assert!((result.mean - expectation).abs() < 1e-9);
    }

    #[test]
    fn mean_of_two_defect_scores() {
        let r = ScoreResult {
            per_defect: vec![("1".into(), 80.0), ("2".into(), 90.0)],
            mean: 85.0,
        };
        assert_eq!(r.mean, 85.0);
    }

    fn dated_doc(path: &str, dates: &[(i32, u32, u32)]) -> SourceDocument {
        let mut doc = parse_source("class X {}", &LanguageProfile::java_like(), path);
        doc.change_dates = dates
            .iter()
            .map(|&(y, m, d)| NaiveDate::from_ymd_opt(y, m, d).unwrap())
            .collect();
        doc.churn = doc.change_dates.len() as u32;
        doc
    }

    #[test]
    fn churn_baseline_ordering() {
        let corpus = vec![
            dated_doc("a.java", &[(2004, 1, 1), (2004, 2, 1), (2004, 3, 1), (2004, 4, 1), (2004, 5, 1)]),
            dated_doc("b.java", &[(2004, 1, 1), (2004, 2, 1)]),
            dated_doc("c.java", &[]),
            dated_doc("d.java", &[]),
        ];
        let r = report("1", "t", "2005-01-01", "b");
        let ranked = baseline_churn(&r, &corpus);
        let paths: Vec<&str> = ranked.entries().iter().map(|(p, _)| p.as_str()).collect();
        assert_eq!(paths, ["a.java", "b.java", "c.java", "d.java"]);
        let groups = ranked.tie_groups();
        assert_eq!(groups.len(), 3);
        assert_eq!(groups[2], 2..4);
    }

    #[test]
    fn churn_baseline_all_zero_is_one_group() {
        let corpus = vec![dated_doc("a.java", &[]), dated_doc("b.java", &[])];
        let r = report("1", "t", "2005-01-01", "b");
        assert_eq!(baseline_churn(&r, &corpus).tie_groups().len(), 1);
    }

    #[test]
    fn churn_baseline_ignores_post_report_changes() {
        let corpus = vec![
            dated_doc("after.java", &[(2006, 1, 1)]),
            dated_doc("never.java", &[]),
        ];
        let r = report("1", "t", "2005-01-01", "b");
        let ranked = baseline_churn(&r, &corpus);
        assert_eq!(ranked.tie_groups().len(), 1); // both count zero
    }

    #[test]
    fn stacktrace_baseline_ordering() {
        let corpus = corpus_of(&[
            ("X.java", "class X {}"),
            ("Y.java", "class Y {}"),
            ("Z.java", "class Z {}"),
            ("W.java", "class W {}"),
        ]);
        let body = "at p.q.Y.method(Y.java:1)\nat p.q.X.other(X.java:2)\n";
        let r = report("1", "crash", "2005-01-01", body);
        let ranked = baseline_stacktrace(&r, &corpus);
        let paths: Vec<&str> = ranked.entries().iter().map(|(p, _)| p.as_str()).collect();
        assert_eq!(&paths[..2], &["Y.java", "X.java"]);
        assert_eq!(ranked.tie_groups().len(), 3);
    }

    #[test]
    fn stacktrace_baseline_no_trace() {
        let corpus = corpus_of(&[("X.java", "class X {}"), ("Y.java", "class Y {}")]);
        let r = report("1", "crash", "2005-01-01", "no trace here");
        assert_eq!(baseline_stacktrace(&r, &corpus).tie_groups().len(), 1);
    }

    #[test]
    fn stacktrace_frame_without_match_ignored() {
        let corpus = corpus_of(&[("X.java", "class X {}"), ("Y.java", "class Y {}")]);
        let r = report("1", "crash", "2005-01-01", "at a.b.Gone.method(Gone.java:1)\n");
        assert_eq!(baseline_stacktrace(&r, &corpus).tie_groups().len(), 1);
    }

    #[test]
    fn optimal_search_finds_discriminating_term() {
        let corpus = corpus_of(&[
            ("Hit.java", "class Hit { int rareword; }"),
            ("A.java", "class A { int common; }"),
            ("B.java", "class B { int common; }"),
            ("C.java", "class C { int common; }"),
            ("D.java", "class D { int common; }"),
        ]);
        let r = report("1", "rareword and common problems", "2005-01-01", "text");
        let fixed = vec!["Hit.java".to_string()];
        let (term, s) = baseline_optimal_search(&r, &corpus, &fixed).unwrap();
        assert_eq!(term.unwrap().as_str(), "rareword");
        assert!((s - 100.0 * 4.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_search_matches_exhaustive() {
        let corpus = corpus_of(&[
            ("A.java", "class A { int alpha; int beta; }"),
            ("B.java", "class B { int beta; int beta2; }"),
            ("C.java", "class C { int gamma; }"),
            ("D.java", "class D { int alpha; }"),
            ("E.java", "class E { }"),
        ]);
        let r = report("1", "alpha beta gamma", "2005-01-01", "delta");
        let fixed = vec!["B.java".to_string()];
        let (_, got) = baseline_optimal_search(&r, &corpus, &fixed).unwrap();
        let mut want = f64::NEG_INFINITY;
        for t in ["alpha", "beta", "gamma", "delta"] {
            let ranked = term_search_ranking(&Term::from(t), &corpus);
            want = want.max(score(&ranked, &fixed, corpus.len()).unwrap());
        }
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn degrade_fraction_zero_is_identity() {
        let r = report("1", "breakpoint fails on ruler", "2005-01-01", "the editor breaks");
        let ctx = DegradeContext::from_reports(std::slice::from_ref(&r));
        let d = degrade(&r, 0.0, DegradationMode::RandomChars, &ctx, 7).unwrap();
        assert_eq!(d, r);
    }

    #[test]
    fn degrade_full_random_chars_removes_all_terms() {
        let r = report("1", "breakpoint fails on ruler", "2005-01-01", "the editor breaks now");
        let ctx = DegradeContext::default();
        let d = degrade(&r, 1.0, DegradationMode::RandomChars, &ctx, 7).unwrap();
        let originals: Vec<Term> = r.title.terms().chain(r.body.terms()).cloned().collect();
        for t in &originals {
            assert!(!d.title.contains(t) && !d.body.contains(t), "term {t} survived");
        }
        // replacements length-match their originals
        let replaced: Vec<&Term> = d.title.terms().chain(d.body.terms()).collect();
        let mut lengths: Vec<usize> = replaced.iter().map(|t| t.as_str().len()).collect();
        let mut original_lengths: Vec<usize> =
            originals.iter().map(|t| t.as_str().len()).collect();
        lengths.sort_unstable();
        original_lengths.sort_unstable();
        assert_eq!(lengths, original_lengths);
    }

    #[test]
    fn degrade_half_replaces_exact_count() {
        let body = "one two three four five six seven eight";
        let r = report("1", "nine ten", "2005-01-01", body);
        assert_eq!(r.title.len() + r.body.len(), 10);
        let ctx = DegradeContext::default();
        let d = degrade(&r, 0.5, DegradationMode::RandomChars, &ctx, 3).unwrap();
        let originals: HashSet<Term> = r.title.terms().chain(r.body.terms()).cloned().collect();
        let survivors: HashSet<Term> = d.title.terms().chain(d.body.terms()).cloned().collect();
        let surviving = originals.intersection(&survivors).count();
        assert_eq!(surviving, 5);
    }

    #[test]
    fn degrade_dictionary_requires_wordlist() {
        let r = report("1", "title words", "2005-01-01", "body");
        let ctx = DegradeContext::default();
        assert!(degrade(&r, 0.5, DegradationMode::Dictionary, &ctx, 1).is_err());
        let ctx = ctx.with_wordlist(vec![Term::from("lexicon")]);
        assert!(degrade(&r, 0.5, DegradationMode::Dictionary, &ctx, 1).is_ok());
    }

    #[test]
    fn degrade_deterministic_under_seed() {
        let r = report("1", "breakpoint fails on ruler", "2005-01-01", "the editor breaks");
        let ctx = DegradeContext::from_reports(std::slice::from_ref(&r));
        let a = degrade(&r, 0.6, DegradationMode::SameCorpus, &ctx, 42).unwrap();
        let b = degrade(&r, 0.6, DegradationMode::SameCorpus, &ctx, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn singleton_planted_signal_wins() {
        let corpus = corpus_of(&[
            ("Hit.java", "class Hit { void m() { int plantedsignal = 1; } }"),
            ("A.java", "class A { void m() { int other = 2; } }"),
            ("B.java", "class B { void m() { int third = 3; } }"),
        ]);
        let index = build_index(&corpus, &[], None);
        let defects = vec![(
            report("1", "crash", "2005-01-01", "plantedsignal misbehaves"),
            GroundTruthLink {
                report_id: "1".into(),
                fixed_paths: vec!["Hit.java".into()],
            },
        )];
        use crate::simrank::{CodeField, ReportField};
        let keys = [
            FeatureKey::new(ReportField::Body, CodeField::MethodBodies),
            FeatureKey::new(ReportField::Title, CodeField::StringLiterals),
            FeatureKey::new(ReportField::Component, CodeField::Comments),
        ];
        let rows = singleton_analysis(&keys, &defects, &corpus, &index).unwrap();
        assert_eq!(rows.len(), 3);
        let best = rows
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert_eq!(best.0, keys[0]);
        assert!(best.1 > rows[1].1);
    }

    #[test]
    fn pearson_perfect_correlations() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_textbook_fixture() {
        let xs = [1.0, 2.0, 4.0, 5.0, 8.0];
        let ys = [2.0, 3.0, 5.0, 4.0, 9.0];
        // independent textbook evaluation: r = cov / (sx * sy)
        let n = 5.0;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>().sqrt();
        let sy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>().sqrt();
        let want = cov / (sx * sy);
        assert!((pearson(&xs, &ys).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn pearson_zero_variance_errors() {
        assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }
}
