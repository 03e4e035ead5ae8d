//! Shared synthetic-corpus generator for the integration suites.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use textloc_core::code_ingest::{parse_source, LanguageProfile, SourceDocument};
use textloc_core::history_ingest::GroundTruthLink;
use textloc_core::index::{build_index, CorpusIndex};
use textloc_core::report_ingest::{parse_report, DefectReport};

const FILLER: &[&str] = &[
    "buffer", "cache", "client", "config", "cursor", "device", "dialog", "editor", "event",
    "frame", "handler", "layout", "logger", "menu", "model", "node", "parser", "plugin",
    "queue", "render", "server", "session", "stream", "table", "thread", "timer", "view",
    "widget", "window", "worker",
];

/// A generated corpus: `files` source documents, the first `defects` of
/// which each carry 5 planted rare terms shared with exactly one report.
pub struct SyntheticCorpus {
    pub corpus: Vec<SourceDocument>,
    pub index: CorpusIndex,
    pub defects: Vec<(DefectReport, GroundTruthLink)>,
}

pub fn planted_terms(defect: usize) -> Vec<String> {
    (0..5).map(|j| format!("plantedsig{defect:02}x{j}")).collect()
}

fn file_text(rng: &mut ChaCha8Rng, file: usize, planted: Option<&[String]>) -> String {
    let mut body_words: Vec<String> = (0..12)
        .map(|_| (*FILLER.choose(rng).expect("non-empty")).to_string())
        .collect();
    if let Some(terms) = planted {
        body_words.extend(terms.iter().cloned());
    }
    body_words.shuffle(rng);
    format!(
        "// {comment} support for module {file}\nclass Gen{file:04} {{\n    void process() {{\n        int {first} = 0;\n        use({rest});\n    }}\n}}\n",
        comment = FILLER.choose(rng).expect("non-empty"),
        first = body_words[0],
        rest = body_words[1..].join(", "),
    )
}

/// Builds `files` source files and `defect_count` defect reports; report
/// `i` shares its 5 planted corpus-rare terms with file `i` only.
pub fn generate(files: usize, defect_count: usize, seed: u64) -> SyntheticCorpus {
    assert!(defect_count <= files);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profile = LanguageProfile::java_like();
    let mut corpus = Vec::with_capacity(files);
    let mut all_planted = Vec::new();
    for i in 0..files {
        let planted = (i < defect_count).then(|| planted_terms(i));
        let text = file_text(&mut rng, i, planted.as_deref());
        if let Some(p) = planted {
            all_planted.push(p);
        }
        corpus.push(parse_source(&text, &profile, &format!("src/Gen{i:04}.java")));
    }
    let mut defects = Vec::with_capacity(defect_count);
    for (i, planted) in all_planted.iter().enumerate() {
        let noise: Vec<&str> = (0..6)
            .map(|_| *FILLER.choose(&mut rng).expect("non-empty"))
            .collect();
        let text = format!(
            "Id: {id}\nTitle: {t0} breaks the {n0} {n1}\nDate: 2005-{month:02}-{day:02}\nComponent: core\n\nThe {n2} fails when {t1} and {t2} interact.\nSteps: trigger {t3} then {t4} with the {n3} open.\n",
            id = 40000 + i,
            t0 = planted[0],
            t1 = planted[1],
            t2 = planted[2],
            t3 = planted[3],
            t4 = planted[4],
            n0 = noise[0],
            n1 = noise[1],
            n2 = noise[2],
            n3 = noise[3],
            month = 1 + (i % 12),
            day = 1 + (i % 28),
        );
        let report = parse_report(&text).expect("generated report parses");
        let link = GroundTruthLink {
            report_id: report.id.clone(),
            fixed_paths: vec![format!("src/Gen{i:04}.java")],
        };
        defects.push((report, link));
    }
    let index = build_index(&corpus, &[], None);
    SyntheticCorpus { corpus, index, defects }
}

/// Random term vector material for oracle tests.
pub fn random_word(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len).map(|_| char::from(rng.gen_range(b'a'..=b'z'))).collect()
}
