//! Ranking throughput on synthetic corpora of increasing size.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use textloc_core::code_ingest::{parse_source, LanguageProfile, SourceDocument};
use textloc_core::index::{build_index, CorpusIndex};
use textloc_core::report_ingest::parse_report;
use textloc_core::simrank::{rank, similarity, CodeField, FeatureKey, ReportField, WeightModel};
use textloc_core::DefectReport;

const WORDS: &[&str] = &[
    "buffer", "cache", "client", "config", "cursor", "device", "dialog", "editor", "event",
    "frame", "handler", "layout", "logger", "menu", "model", "node", "parser", "plugin",
    "queue", "render", "server", "session", "stream", "table", "thread", "timer", "view",
];

fn synthetic(files: usize) -> (Vec<SourceDocument>, CorpusIndex, DefectReport) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let profile = LanguageProfile::java_like();
    let corpus: Vec<SourceDocument> = (0..files)
        .map(|i| {
            let mut words: Vec<&str> = (0..15)
                .map(|_| *WORDS.choose(&mut rng).expect("non-empty"))
                .collect();
            words.shuffle(&mut rng);
            parse_source(
                &format!(
                    "// {c} module {i}\nclass Gen{i} {{ void run() {{ use({w}); }} }}",
                    c = words[0],
                    w = words.join(", ")
                ),
                &profile,
                &format!("src/Gen{i:05}.java"),
            )
        })
        .collect();
    let index = build_index(&corpus, &[], None);
    let report = parse_report(
        "Id: 1\nTitle: editor buffer corrupts the cursor\nDate: 2005-06-01\nComponent: core\n\nThe render thread stalls while the parser drains the event queue.\n",
    )
    .expect("report");
    (corpus, index, report)
}

fn model() -> WeightModel {
    let mut m = WeightModel::new();
    m.set(FeatureKey::new(ReportField::Title, CodeField::MethodBodies), 2.0);
    m.set(FeatureKey::new(ReportField::Body, CodeField::MethodBodies), 1.0);
    m.set(FeatureKey::new(ReportField::Body, CodeField::Comments), 0.5);
    m.set(FeatureKey::new(ReportField::Title, CodeField::ClassNames), 0.5);
    m
}

fn bench_rank(c: &mut Criterion) {
    let model = model();
    let mut group = c.benchmark_group("rank");
    for files in [1_000usize, 10_000] {
        let (corpus, index, report) = synthetic(files);
        group.bench_with_input(BenchmarkId::from_parameter(files), &files, |b, _| {
            b.iter(|| rank(&report, &corpus, &model, &index).expect("rank"));
        });
    }
    group.finish();
}

fn bench_similarity(c: &mut Criterion) {
    let (corpus, index, report) = synthetic(1_000);
    c.bench_function("similarity/body-x-method-bodies", |b| {
        b.iter(|| {
            corpus
                .iter()
                .map(|doc| similarity(&report.body, &doc.method_bodies, &index))
                .sum::<f64>()
        });
    });
}

criterion_group!(benches, bench_rank, bench_similarity);
criterion_main!(benches);
