//! Command-line front end: builds corpus indexes, ranks files for a defect
//! report, trains weight models, and runs the evaluation experiments.
//!
//! Every run is reproducible: the random seed defaults to a fixed constant
//! and all knobs can come from flags or a `key = value` config file, with
//! flags winning.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use textloc_core::code_ingest::{scan_tree, LanguageProfile};
use textloc_core::evalbench::{
    baseline_churn, baseline_optimal_search, baseline_stacktrace, degrade, evaluate, score,
    singleton_analysis, DegradationMode, DegradeContext,
};
use textloc_core::history_ingest::{ingest_changelog, mine_links, parse_changelog, GroundTruthLink};
use textloc_core::index::{build_index, load_index, save_index, CorpusIndex};
use textloc_core::report_ingest::parse_report;
use textloc_core::simrank::{all_feature_keys, rank, WeightModel};
use textloc_core::textkit::{tokenize_plain, Term};
use textloc_core::train::{chronological_split, train_model, DefectSet, TrainConfig};
use textloc_core::{DefectReport, Error, Result, SourceDocument};

const DEFAULT_SEED: u64 = 20050414;

#[derive(Parser)]
#[command(name = "textloc", version, about = "Rank source files by textual similarity to a defect report")]
struct Cli {
    /// Config file with `key = value` lines; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default, Clone)]
struct CommonOpts {
    /// Corpus root directory of source files
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Change history file
    #[arg(long)]
    changelog: Option<PathBuf>,
    /// Directory of defect report files
    #[arg(long)]
    reports: Option<PathBuf>,
    /// Index file path
    #[arg(long)]
    index: Option<PathBuf>,
    /// Weight model file path
    #[arg(long)]
    model: Option<PathBuf>,
    /// Random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Only count reports submitted strictly before this date toward idf
    #[arg(long, value_name = "DATE")]
    cutoff_idf: Option<NaiveDate>,
    /// Random unfixed files per defect during training
    #[arg(long)]
    negatives: Option<usize>,
    /// Chronologically earliest fraction of defects used for training
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Coefficient perturbation step
    #[arg(long)]
    step: Option<f64>,
    /// Relative-improvement stopping tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Additional language profile files
    #[arg(long)]
    profile: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the corpus, attach history, and persist the index
    Index {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Rank corpus files for one defect report
    Rank {
        #[command(flatten)]
        common: CommonOpts,
        /// Defect report file
        report: PathBuf,
        /// Number of rows to print
        #[arg(long)]
        top: Option<usize>,
    },
    /// Learn model weights from the chronologically earliest defects
    Train {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Score a model on the held-out defects
    Eval {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Score a comparison baseline on the held-out defects
    Baseline {
        #[command(flatten)]
        common: CommonOpts,
        /// churn, stacktrace, or optimal-search
        #[arg(long)]
        mode: Option<String>,
    },
    /// Re-score a model against increasingly garbled report text
    Degrade {
        #[command(flatten)]
        common: CommonOpts,
        /// same-corpus, dictionary, or random-chars
        #[arg(long)]
        mode: Option<String>,
        /// Single replacement fraction; omitted sweeps 0.0..=1.0 by 0.1
        #[arg(long)]
        fraction: Option<f64>,
        /// Wordlist file for dictionary mode
        #[arg(long)]
        wordlist: Option<PathBuf>,
    },
    /// Score every feature pair on its own
    Singleton {
        #[command(flatten)]
        common: CommonOpts,
    },
}

/// Effective settings after merging defaults, config file, and flags.
struct RunConfig {
    corpus: Option<PathBuf>,
    changelog: Option<PathBuf>,
    reports: Option<PathBuf>,
    index: Option<PathBuf>,
    model: Option<PathBuf>,
    seed: u64,
    cutoff_idf: Option<NaiveDate>,
    negatives: usize,
    train_fraction: f64,
    step: f64,
    tol: f64,
    profiles: Vec<PathBuf>,
    file_values: HashMap<String, String>,
}

fn parse_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected `key = value`, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        values.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(values)
}

fn parsed<T: std::str::FromStr>(values: &HashMap<String, String>, key: &str) -> Result<Option<T>> {
    match values.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("config key {key}: cannot parse {raw:?}"))),
    }
}

impl RunConfig {
    fn resolve(config_path: Option<&Path>, opts: &CommonOpts) -> Result<RunConfig> {
        let file_values = match config_path {
            Some(p) => parse_config_file(p)?,
            None => HashMap::new(),
        };
        let path_of = |key: &str, flag: &Option<PathBuf>| -> Option<PathBuf> {
            flag.clone().or_else(|| file_values.get(key).map(PathBuf::from))
        };
        let mut profiles: Vec<PathBuf> = opts.profile.clone();
        if profiles.is_empty() {
            if let Some(raw) = file_values.get("profile") {
                profiles = raw.split(',').map(|s| PathBuf::from(s.trim())).collect();
            }
        }
        Ok(RunConfig {
            corpus: path_of("corpus", &opts.corpus),
            changelog: path_of("changelog", &opts.changelog),
            reports: path_of("reports", &opts.reports),
            index: path_of("index", &opts.index),
            model: path_of("model", &opts.model),
            seed: opts.seed.or(parsed(&file_values, "seed")?).unwrap_or(DEFAULT_SEED),
            cutoff_idf: opts.cutoff_idf.or(parsed(&file_values, "cutoff-idf")?),
            negatives: opts.negatives.or(parsed(&file_values, "negatives")?).unwrap_or(150),
            train_fraction: opts
                .train_fraction
                .or(parsed(&file_values, "train-fraction")?)
                .unwrap_or(0.08),
            step: opts.step.or(parsed(&file_values, "step")?).unwrap_or(0.10),
            tol: opts.tol.or(parsed(&file_values, "tol")?).unwrap_or(0.0001),
            profiles,
            file_values,
        })
    }

    fn require<'a>(&self, field: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
        field
            .as_deref()
            .ok_or_else(|| Error::Usage(format!("--{name} is required for this command")))
    }

    fn language_profiles(&self) -> Result<Vec<LanguageProfile>> {
        let mut profiles = LanguageProfile::builtin();
        for path in &self.profiles {
            profiles.push(LanguageProfile::from_config_file(path)?);
        }
        Ok(profiles)
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            negatives_per_defect: self.negatives,
            seed: self.seed,
            step: self.step,
            tol: self.tol,
            ..TrainConfig::default()
        }
    }
}

fn read_reports(dir: &Path) -> Result<Vec<DefectReport>> {
    if !dir.is_dir() {
        return Err(Error::Config(format!("reports path {} is not a directory", dir.display())));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut reports = Vec::new();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        reports.push(parse_report(&text).map_err(|e| {
            Error::Ingest {
                path: path.clone(),
                reason: e.to_string(),
            }
        })?);
    }
    Ok(reports)
}

/// Corpus with history attached, its index, and reports paired with mined
/// ground-truth links.
struct LoadedData {
    corpus: Vec<SourceDocument>,
    index: CorpusIndex,
    defects: Vec<(DefectReport, GroundTruthLink)>,
}

fn load_data(config: &RunConfig) -> Result<LoadedData> {
    let corpus_root = config.require(&config.corpus, "corpus")?;
    let reports_dir = config.require(&config.reports, "reports")?;
    let changelog_path = config.require(&config.changelog, "changelog")?;

    let profiles = config.language_profiles()?;
    let scan = scan_tree(corpus_root, &profiles)?;
    let mut corpus = scan.documents;
    for (path, reason) in &scan.skipped {
        eprintln!("warning: skipped {}: {reason}", path.display());
    }
    if corpus.is_empty() {
        return Err(Error::Ingest {
            path: corpus_root.to_path_buf(),
            reason: "no source files found".into(),
        });
    }

    let changelog_text =
        fs::read_to_string(changelog_path).map_err(|e| Error::io(changelog_path, e))?;
    let records = parse_changelog(&changelog_text)?;
    let unknown = ingest_changelog(&records, &mut corpus);
    if !unknown.is_empty() {
        eprintln!("warning: {} changelog path(s) not in the corpus", unknown.len());
    }

    let reports = read_reports(reports_dir)?;
    let report_ids: Vec<String> = reports.iter().map(|r| r.id.clone()).collect();
    let extensions: Vec<String> = profiles
        .iter()
        .flat_map(|p| p.file_extensions.iter().cloned())
        .collect();
    let links = mine_links(&records, &report_ids, &extensions, false);
    let by_id: HashMap<&str, &GroundTruthLink> =
        links.iter().map(|l| (l.report_id.as_str(), l)).collect();

    let index = build_index(&corpus, &reports, config.cutoff_idf);
    let defects: Vec<(DefectReport, GroundTruthLink)> = reports
        .into_iter()
        .filter_map(|r| by_id.get(r.id.as_str()).map(|&l| (r, l.clone())))
        .collect();
    if defects.is_empty() {
        return Err(Error::Ingest {
            path: changelog_path.to_path_buf(),
            reason: "no ground-truth links could be mined for any report".into(),
        });
    }
    Ok(LoadedData { corpus, index, defects })
}

fn split_defects(
    data: LoadedData,
    config: &RunConfig,
) -> Result<(LoadedData, DefectSet, DefectSet)> {
    let (train, holdout) = chronological_split(data.defects.clone(), config.train_fraction)?;
    Ok((data, train, holdout))
}

/// Held-out defects if any exist, otherwise the training set — small
/// fixture runs should still produce output.
fn eval_set<'a>(
    train: &'a [(DefectReport, GroundTruthLink)],
    holdout: &'a [(DefectReport, GroundTruthLink)],
) -> &'a [(DefectReport, GroundTruthLink)] {
    if holdout.is_empty() {
        train
    } else {
        holdout
    }
}

fn cmd_index(config: &RunConfig) -> Result<()> {
    let corpus_root = config.require(&config.corpus, "corpus")?;
    let index_path = config.require(&config.index, "index")?;

    let profiles = config.language_profiles()?;
    let scan = scan_tree(corpus_root, &profiles)?;
    let mut corpus = scan.documents;
    for (path, reason) in &scan.skipped {
        eprintln!("warning: skipped {}: {reason}", path.display());
    }

    match &config.changelog {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let records = parse_changelog(&text)?;
            let unknown = ingest_changelog(&records, &mut corpus);
            if !unknown.is_empty() {
                eprintln!("warning: {} changelog path(s) not in the corpus", unknown.len());
            }
        }
        None => eprintln!("warning: no changelog given, index has zero churn"),
    }

    let reports = match &config.reports {
        Some(dir) => read_reports(dir)?,
        None => Vec::new(),
    };
    let index = build_index(&corpus, &reports, config.cutoff_idf);
    save_index(index_path, &index, &corpus)?;
    println!("documents\t{}", index.document_count);
    println!("terms\t{}", index.term_count());
    Ok(())
}

fn cmd_rank(config: &RunConfig, report_path: &Path, top: Option<usize>) -> Result<()> {
    let index_path = config.require(&config.index, "index")?;
    let model_path = config.require(&config.model, "model")?;
    let (index, corpus) = load_index(index_path)?;
    let model = WeightModel::load(model_path)?;
    let text = fs::read_to_string(report_path).map_err(|e| Error::io(report_path, e))?;
    let report = parse_report(&text)?;

    let started = Instant::now();
    let ranked = rank(&report, &corpus, &model, &index)?;
    let elapsed = started.elapsed();

    let top = top
        .or(parsed(&config.file_values, "top").unwrap_or(None))
        .unwrap_or(10)
        .min(ranked.len());
    println!("rank\tvalue\tpath");
    for (i, (path, value)) in ranked.entries()[..top].iter().enumerate() {
        println!("{}\t{value}\t{path}", i + 1);
    }
    eprintln!("ranked {} files in {:.3}s", ranked.len(), elapsed.as_secs_f64());
    Ok(())
}

fn cmd_train(config: &RunConfig) -> Result<()> {
    let model_path = config.require(&config.model, "model")?;
    let (data, train, _) = split_defects(load_data(config)?, config)?;
    let trained = train_model(&train, &data.corpus, &data.index, &config.train_config())?;
    for line in &trained.log {
        println!("{line}");
    }
    println!(
        "features\t{} retained of {} ({:.2}% variance)",
        trained.stats.retained.len(),
        trained.stats.f_ratios.len(),
        trained.stats.explained_variance * 100.0
    );
    println!("training-score\t{:.4}", trained.training_score);
    trained.model.save(model_path)?;
    println!("model\t{}", model_path.display());
    Ok(())
}

fn cmd_eval(config: &RunConfig) -> Result<()> {
    let model_path = config.require(&config.model, "model")?;
    let model = WeightModel::load(model_path)?;
    let (data, train, holdout) = split_defects(load_data(config)?, config)?;
    let result = evaluate(&model, eval_set(&train, &holdout), &data.corpus, &data.index)?;
    println!("report\tscore");
    for (id, s) in &result.per_defect {
        println!("{id}\t{s:.4}");
    }
    println!("aggregate\t{:.4}", result.mean);
    Ok(())
}

fn cmd_baseline(config: &RunConfig, mode: Option<&str>) -> Result<()> {
    let mode = mode
        .map(str::to_string)
        .or_else(|| config.file_values.get("mode").cloned())
        .ok_or_else(|| Error::Usage("--mode is required for baseline".into()))?;
    let (data, train, holdout) = split_defects(load_data(config)?, config)?;
    let defects = eval_set(&train, &holdout);
    let total = data.corpus.len();
    println!("report\tscore");
    let mut sum = 0.0;
    for (report, link) in defects {
        let s = match mode.as_str() {
            "churn" => score(&baseline_churn(report, &data.corpus), &link.fixed_paths, total)?,
            "stacktrace" => {
                score(&baseline_stacktrace(report, &data.corpus), &link.fixed_paths, total)?
            }
            "optimal-search" => {
                baseline_optimal_search(report, &data.corpus, &link.fixed_paths)?.1
            }
            other => return Err(Error::Usage(format!("unknown baseline mode {other:?}"))),
        };
        println!("{}\t{s:.4}", report.id);
        sum += s;
    }
    println!("aggregate\t{:.4}", sum / defects.len() as f64);
    Ok(())
}

fn read_wordlist(path: &Path) -> Result<Vec<Term>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut words: Vec<Term> = text.lines().flat_map(tokenize_plain).collect();
    words.sort();
    words.dedup();
    if words.is_empty() {
        return Err(Error::Config(format!("wordlist {} is empty", path.display())));
    }
    Ok(words)
}

fn cmd_degrade(
    config: &RunConfig,
    mode: Option<&str>,
    fraction: Option<f64>,
    wordlist: Option<&Path>,
) -> Result<()> {
    let model_path = config.require(&config.model, "model")?;
    let model = WeightModel::load(model_path)?;
    let modes: Vec<DegradationMode> = match mode
        .map(str::to_string)
        .or_else(|| config.file_values.get("mode").cloned())
    {
        Some(m) => vec![m.parse()?],
        None => DegradationMode::ALL.to_vec(),
    };
    let fractions: Vec<f64> = match fraction.or(parsed(&config.file_values, "fraction")?) {
        Some(f) => vec![f],
        None => (0..=10).map(|i| f64::from(i) / 10.0).collect(),
    };
    let wordlist_path = wordlist
        .map(Path::to_path_buf)
        .or_else(|| config.file_values.get("wordlist").map(PathBuf::from));

    let (data, train, holdout) = split_defects(load_data(config)?, config)?;
    let defects = eval_set(&train, &holdout);
    let all_reports: Vec<DefectReport> =
        data.defects.iter().map(|(r, _)| r.clone()).collect();
    let mut ctx = DegradeContext::from_reports(&all_reports);
    if let Some(path) = &wordlist_path {
        ctx = ctx.with_wordlist(read_wordlist(path)?);
    }

    println!("mode\tfraction\tmean_score");
    for mode in modes {
        for &fraction in &fractions {
            let degraded: Vec<(DefectReport, GroundTruthLink)> = defects
                .iter()
                .map(|(r, l)| Ok((degrade(r, fraction, mode, &ctx, config.seed)?, l.clone())))
                .collect::<Result<_>>()?;
            let result = evaluate(&model, &degraded, &data.corpus, &data.index)?;
            println!("{}\t{fraction:.1}\t{:.4}", mode.as_str(), result.mean);
        }
    }
    Ok(())
}

fn cmd_singleton(config: &RunConfig) -> Result<()> {
    let (data, train, holdout) = split_defects(load_data(config)?, config)?;
    let rows = singleton_analysis(
        &all_feature_keys(),
        eval_set(&train, &holdout),
        &data.corpus,
        &data.index,
    )?;
    println!("report_field\tcode_field\tscore");
    for (key, s) in rows {
        println!("{key}\t{s:.4}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config_path = cli.config.as_deref();
    match &cli.command {
        Command::Index { common } => cmd_index(&RunConfig::resolve(config_path, common)?),
        Command::Rank { common, report, top } => {
            cmd_rank(&RunConfig::resolve(config_path, common)?, report, *top)
        }
        Command::Train { common } => cmd_train(&RunConfig::resolve(config_path, common)?),
        Command::Eval { common } => cmd_eval(&RunConfig::resolve(config_path, common)?),
        Command::Baseline { common, mode } => {
            cmd_baseline(&RunConfig::resolve(config_path, common)?, mode.as_deref())
        }
        Command::Degrade { common, mode, fraction, wordlist } => cmd_degrade(
            &RunConfig::resolve(config_path, common)?,
            mode.as_deref(),
            *fraction,
            wordlist.as_deref(),
        ),
        Command::Singleton { common } => cmd_singleton(&RunConfig::resolve(config_path, common)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
