//! Weight learning: per-defect positive/negative sample construction,
//! one-way ANOVA F-ratios as starting weights, PCA-based feature pruning,
//! and a hill-climbing refinement that perturbs one coefficient by ±10%
//! per move and maximizes the mean training *score*.
//!
//! The feature space is the full cross product of report and code fields;
//! pruned features keep weight 0 and are never perturbed.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::code_ingest::SourceDocument;
use crate::error::{Error, Result};
use crate::evalbench::evaluate;
use crate::history_ingest::GroundTruthLink;
use crate::index::CorpusIndex;
use crate::report_ingest::DefectReport;
use crate::simrank::{all_feature_keys, feature_similarity, FeatureKey, WeightModel};

/// Cap applied to infinite F-ratios from perfectly separating features.
pub const F_RATIO_CAP: f64 = 1e6;

/// Hard stop for the hill climb regardless of improvement.
pub const MAX_ITERATIONS: usize = 1000;

/// One (report, file) datapoint: the feature vector follows the canonical
/// [`all_feature_keys`] order, label 1 iff the file was fixed for the
/// defect.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub report_id: String,
    pub path: String,
    pub features: Vec<f64>,
    pub label: u8,
}

/// Statistics gathered while seeding and pruning the model.
#[derive(Debug, Clone)]
pub struct FeatureStats {
    /// Per-feature one-way F-ratio, canonical key order.
    pub f_ratios: Vec<(FeatureKey, f64)>,
    /// Features surviving PCA pruning.
    pub retained: Vec<FeatureKey>,
    /// Cumulative variance fraction explained by the kept components.
    pub explained_variance: f64,
}

/// Everything `train_model` produces: the final model, seeding statistics,
/// and the iteration log of the hill climb.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: WeightModel,
    pub stats: FeatureStats,
    pub log: Vec<String>,
    pub training_score: f64,
}

/// Tuning knobs with the defaults used throughout.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub negatives_per_defect: usize,
    pub seed: u64,
    pub step: f64,
    pub tol: f64,
    pub pca_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            negatives_per_defect: 150,
            seed: 20050414,
            step: 0.10,
            tol: 0.0001,
            pca_threshold: 0.99,
        }
    }
}

fn feature_vector(report: &DefectReport, file: &SourceDocument, index: &CorpusIndex) -> Vec<f64> {
    all_feature_keys()
        .iter()
        .map(|&key| feature_similarity(report, file, key, index))
        .collect()
}

/// Builds one label-1 sample per fixed file and up to
/// `negatives_per_defect` label-0 samples per defect, drawn uniformly
/// without replacement from the unfixed files. Defects whose fixed files
/// are all absent from the corpus are skipped with a warning on stderr.
pub fn build_samples(
    defects: &[(DefectReport, GroundTruthLink)],
    corpus: &[SourceDocument],
    index: &CorpusIndex,
    negatives_per_defect: usize,
    seed: u64,
) -> Result<Vec<TrainingSample>> {
    if negatives_per_defect == 0 {
        return Err(Error::Usage("negatives per defect must be at least 1".into()));
    }
    let by_path: HashMap<&str, usize> = corpus
        .iter()
        .enumerate()
        .map(|(i, d)| (d.path.as_str(), i))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for (report, link) in defects {
        let fixed: Vec<usize> = link
            .fixed_paths
            .iter()
            .filter_map(|p| by_path.get(p.as_str()).copied())
            .collect();
        if fixed.is_empty() {
            eprintln!(
                "warning: defect {} has no fixed files in the corpus, skipping",
                report.id
            );
            continue;
        }
        for &i in &fixed {
            samples.push(TrainingSample {
                report_id: report.id.clone(),
                path: corpus[i].path.clone(),
                features: feature_vector(report, &corpus[i], index),
                label: 1,
            });
        }
        let mut unfixed: Vec<usize> = (0..corpus.len()).filter(|i| !fixed.contains(i)).collect();
        unfixed.shuffle(&mut rng);
        unfixed.truncate(negatives_per_defect);
        unfixed.sort_unstable();
        for i in unfixed {
            samples.push(TrainingSample {
                report_id: report.id.clone(),
                path: corpus[i].path.clone(),
                features: feature_vector(report, &corpus[i], index),
                label: 0,
            });
        }
    }
    Ok(samples)
}

/// One-way F-ratio of a single feature grouped by label: between-group
/// mean square over within-group mean square. Zero within-group variance
/// with real separation clamps to [`F_RATIO_CAP`]; no variance at all is 0.
pub fn f_ratio(values: &[f64], labels: &[u8]) -> f64 {
    let n = values.len() as f64;
    let groups = [0u8, 1u8];
    let grand = values.iter().sum::<f64>() / n;
    let mut between = 0.0;
    let mut within = 0.0;
    for &g in &groups {
        let members: Vec<f64> = values
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == g)
            .map(|(&v, _)| v)
            .collect();
        if members.is_empty() {
            continue;
        }
        let m = members.iter().sum::<f64>() / members.len() as f64;
        between += members.len() as f64 * (m - grand).powi(2);
        within += members.iter().map(|v| (v - m).powi(2)).sum::<f64>();
    }
    let df_between = (groups.len() - 1) as f64;
    let df_within = n - groups.len() as f64;
    if between == 0.0 {
        return 0.0;
    }
    if within == 0.0 || df_within <= 0.0 {
        return F_RATIO_CAP;
    }
    let f = (between / df_between) / (within / df_within);
    f.min(F_RATIO_CAP)
}

/// Per-feature F-ratios over the sample set, canonical key order.
pub fn anova_init(samples: &[TrainingSample]) -> Result<Vec<(FeatureKey, f64)>> {
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::Usage(
            "ANOVA seeding requires both positive and negative samples".into(),
        ));
    }
    let keys = all_feature_keys();
    Ok(keys
        .iter()
        .enumerate()
        .map(|(j, &key)| {
            let column: Vec<f64> = samples.iter().map(|s| s.features[j]).collect();
            (key, f_ratio(&column, &labels))
        })
        .collect())
}

/// PCA on standardized columns: keeps the smallest set of components whose
/// cumulative explained variance reaches `threshold`, then retains the
/// column with the largest absolute loading on each kept component.
/// Returns (retained column indices, explained fraction).
pub fn pca_select_columns(data: &[Vec<f64>], threshold: f64) -> Result<(Vec<usize>, f64)> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Usage(format!("PCA threshold {threshold} outside (0, 1]")));
    }
    let rows = data.len();
    let cols = data.first().map_or(0, Vec::len);
    if rows < cols {
        return Err(Error::Usage(format!(
            "PCA needs at least as many samples ({rows}) as features ({cols})"
        )));
    }
    // standardize; constant columns are dropped from the decomposition and
    // can never be retained
    let mut means = vec![0.0; cols];
    let mut stds = vec![0.0; cols];
    for j in 0..cols {
        let mean = data.iter().map(|r| r[j]).sum::<f64>() / rows as f64;
        let var = data.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / rows as f64;
        means[j] = mean;
        stds[j] = var.sqrt();
    }
    let varying: Vec<usize> = (0..cols).filter(|&j| stds[j] > 0.0).collect();
    if varying.is_empty() {
        return Ok((Vec::new(), 0.0));
    }
    let p = varying.len();
    let standardized = DMatrix::from_fn(rows, p, |i, jj| {
        let j = varying[jj];
        (data[i][j] - means[j]) / stds[j]
    });
    let covariance = (standardized.transpose() * &standardized) / rows as f64;
    let eigen = SymmetricEigen::new(covariance);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let total: f64 = eigen.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let mut cumulative = 0.0;
    let mut retained = Vec::new();
    for &c in &order {
        cumulative += eigen.eigenvalues[c].max(0.0) / total;
        let component = eigen.eigenvectors.column(c);
        let strongest = (0..p)
            .max_by(|&a, &b| component[a].abs().total_cmp(&component[b].abs()))
            .expect("non-empty component");
        let feature = varying[strongest];
        if !retained.contains(&feature) {
            retained.push(feature);
        }
        if cumulative >= threshold {
            break;
        }
    }
    retained.sort_unstable();
    Ok((retained, cumulative.min(1.0)))
}

/// [`pca_select_columns`] over the canonical feature space of a sample set.
pub fn pca_select(samples: &[TrainingSample], threshold: f64) -> Result<(Vec<FeatureKey>, f64)> {
    let data: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
    let (indices, explained) = pca_select_columns(&data, threshold)?;
    let keys = all_feature_keys();
    Ok((indices.into_iter().map(|i| keys[i]).collect(), explained))
}

/// Hill climb over single-coefficient ±`step` moves, maximizing mean
/// training score. Ties keep the incumbent; stops when the relative
/// improvement drops below `tol`, no move helps, or the iteration cap
/// hits. Returns the final model, the iteration log, and the final score.
pub fn gradient_ascent(
    initial: &WeightModel,
    train_defects: &[(DefectReport, GroundTruthLink)],
    corpus: &[SourceDocument],
    index: &CorpusIndex,
    step: f64,
    tol: f64,
) -> Result<(WeightModel, Vec<String>, f64)> {
    if train_defects.is_empty() {
        return Err(Error::Usage("gradient ascent requires a training set".into()));
    }
    if step <= 0.0 || tol <= 0.0 {
        return Err(Error::Usage("step and tolerance must be positive".into()));
    }
    let mut incumbent = initial.clone();
    let mut incumbent_score = evaluate(&incumbent, train_defects, corpus, index)?.mean;
    let mut log = vec![format!("iteration 0 score {incumbent_score:.6} initial")];
    for iteration in 1..=MAX_ITERATIONS {
        let moves: Vec<(FeatureKey, f64)> = incumbent
            .active()
            .iter()
            .flat_map(|&(key, w)| [(key, w * (1.0 + step)), (key, w * (1.0 - step))])
            .filter(|&(_, w)| w > 0.0)
            .collect();
        if moves.is_empty() {
            log.push(format!("iteration {iteration} score {incumbent_score:.6} plateau"));
            break;
        }
        let scored: Vec<(FeatureKey, f64, f64)> = moves
            .par_iter()
            .map(|&(key, w)| {
                let mut candidate = incumbent.clone();
                candidate.set(key, w);
                let s = evaluate(&candidate, train_defects, corpus, index)?.mean;
                Ok((key, w, s))
            })
            .collect::<Result<_>>()?;
        let best = scored
            .iter()
            .max_by(|a, b| a.2.total_cmp(&b.2))
            .copied()
            .expect("non-empty move set");
        if best.2 <= incumbent_score {
            log.push(format!("iteration {iteration} score {incumbent_score:.6} no move"));
            break;
        }
        let improvement = if incumbent_score.abs() > 0.0 {
            (best.2 - incumbent_score) / incumbent_score.abs()
        } else {
            best.2 - incumbent_score
        };
        incumbent.set(best.0, best.1);
        incumbent_score = best.2;
        log.push(format!(
            "iteration {iteration} score {incumbent_score:.6} move {} {:.6}",
            best.0, best.1
        ));
        if improvement < tol {
            break;
        }
    }
    Ok((incumbent, log, incumbent_score))
}

/// Defect reports paired with their mined ground-truth links.
pub type DefectSet = Vec<(DefectReport, GroundTruthLink)>;

/// Chronological split by report date: the earliest `fraction` of defects
/// trains, the rest holds out. Undated reports sort last; ties break by id.
pub fn chronological_split(mut defects: DefectSet, fraction: f64) -> Result<(DefectSet, DefectSet)> {
    if !(0.0 < fraction && fraction <= 1.0) {
        return Err(Error::Usage(format!("train fraction {fraction} outside (0, 1]")));
    }
    defects.sort_by(|a, b| {
        let ka = (a.0.submitted.is_none(), a.0.submitted, a.0.id.clone());
        let kb = (b.0.submitted.is_none(), b.0.submitted, b.0.id.clone());
        ka.cmp(&kb)
    });
    let n = defects.len();
    let cut = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let holdout = defects.split_off(cut);
    Ok((defects, holdout))
}

/// Full training pipeline: samples → ANOVA seeding → PCA pruning →
/// hill climb.
pub fn train_model(
    train_defects: &[(DefectReport, GroundTruthLink)],
    corpus: &[SourceDocument],
    index: &CorpusIndex,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    let samples = build_samples(
        train_defects,
        corpus,
        index,
        config.negatives_per_defect,
        config.seed,
    )?;
    if samples.is_empty() {
        return Err(Error::Usage("no usable training samples".into()));
    }
    let f_ratios = anova_init(&samples)?;
    let (retained, explained_variance) = if samples.len() >= all_feature_keys().len() {
        pca_select(&samples, config.pca_threshold)?
    } else {
        // too few samples to estimate a covariance spectrum; skip pruning
        eprintln!(
            "warning: only {} samples for {} features, skipping PCA pruning",
            samples.len(),
            all_feature_keys().len()
        );
        (all_feature_keys(), 1.0)
    };
    let mut initial = WeightModel::new();
    for &(key, f) in &f_ratios {
        if retained.contains(&key) && f > 0.0 {
            initial.set(key, f);
        }
    }
    if !initial.is_usable() {
        // degenerate seeding: give every retained feature an equal start
        for &key in &retained {
            initial.set(key, 1.0);
        }
    }
    let (model, log, training_score) =
        gradient_ascent(&initial, train_defects, corpus, index, config.step, config.tol)?;
    Ok(TrainedModel {
        model,
        stats: FeatureStats {
            f_ratios,
            retained,
            explained_variance,
        },
        log,
        training_score,
    })
}
