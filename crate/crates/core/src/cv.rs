//! Stratified k-fold cross-validation of one model spec on one feature set.
//!
//! Per fold: optional imputation, resampling of the training part only,
//! fit, scoring of the held-out rows. Folds run in parallel and are
//! assembled in fold order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split_stratified, DataTable, SplitPlan};
use crate::error::{Error, Result};
use crate::impute::{fill_boolean, knn_impute, ImputerConfig, KnnImputer};
use crate::metrics::{
    binary_metrics, confusion_matrix, roc_auc, Aggregate, ConfusionCounts, ConfusionMatrix, RocPoint,
};
use crate::models::{fit_named, Family, ModelSpec};
use crate::rebalance::{ResampleMode, ResamplePlan};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ImputeScope {
    /// Fit the imputer on each training fold and apply it to both parts.
    #[default]
    TrainOnly,
    /// Impute the whole table once before splitting.
    WholeTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub fold_count: usize,
    pub seed: u64,
    pub resample: ResampleMode,
    /// `None` requires a table without absent cells.
    pub impute: Option<ImputeScope>,
    pub imputer: ImputerConfig,
    /// Binary tasks only; defaults to the majority class.
    pub positive_class: Option<usize>,
    /// Decision threshold on the positive score; family default when `None`.
    pub threshold: Option<f64>,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            fold_count: 5,
            seed: 0,
            resample: ResampleMode::None,
            impute: None,
            imputer: ImputerConfig::default(),
            positive_class: None,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub resample_seed: u64,
    pub model_seed: u64,
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub auc: Option<f64>,
    pub counts: Option<ConfusionCounts>,
    /// Indexed by position in `EvalReport::classes`.
    pub confusion: ConfusionMatrix,
    pub roc: Option<Vec<RocPoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub family: Family,
    pub spec: ModelSpec,
    pub features: Vec<String>,
    pub fold_count: usize,
    pub seed: u64,
    pub split_seed: u64,
    pub resample: ResampleMode,
    pub impute: Option<ImputeScope>,
    pub classes: Vec<usize>,
    pub positive_class: Option<usize>,
    pub threshold: f64,
    pub folds: Vec<FoldResult>,
    pub accuracy: Aggregate,
    pub sensitivity: Option<Aggregate>,
    pub specificity: Option<Aggregate>,
    pub auc: Option<Aggregate>,
    /// Curve over the held-out scores of all folds together.
    pub pooled_roc: Option<Vec<RocPoint>>,
    pub pooled_auc: Option<f64>,
}

/// Training and held-out tables of one fold, after imputation, feature
/// selection and resampling.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub train: DataTable,
    pub test: DataTable,
}

pub fn split_seed(seed: u64) -> u64 {
    derive_seed(seed, "split", 0)
}

pub fn resample_seed(seed: u64, fold: usize) -> u64 {
    derive_seed(seed, "resample", fold as u64)
}

pub fn model_seed(spec_seed: u64, fold: usize) -> u64 {
    derive_seed(spec_seed, "fold", fold as u64)
}

/// Majority class, ties to the smaller id.
pub fn majority_class(labels: &[usize]) -> Option<usize> {
    let counts = crate::data::class_counts(labels);
    (0..counts.len()).filter(|&c| counts[c] > 0).max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
}

/// Imputes when `scope` is whole-table, then builds the split plan.
fn prepare(table: &DataTable, opts: &CvOptions) -> Result<(DataTable, SplitPlan)> {
    if opts.fold_count < 2 {
        return Err(Error::InvalidArgument("fold_count must be at least 2".into()));
    }
    let base = match opts.impute {
        Some(ImputeScope::WholeTable) => knn_impute(&fill_boolean(table), opts.imputer)?,
        Some(ImputeScope::TrainOnly) => fill_boolean(table),
        None => table.clone(),
    };
    let plan = split_stratified(&base, opts.fold_count, split_seed(opts.seed))?;
    Ok((base, plan))
}

fn fold_data(base: &DataTable, plan: &SplitPlan, fold: usize, features: &[String], opts: &CvOptions) -> Result<FoldData> {
    let mut train = base.select_rows(&plan.train_indices(fold));
    let mut test = base.select_rows(&plan.test_indices(fold));
    if opts.impute == Some(ImputeScope::TrainOnly) {
        let imputer = KnnImputer::fit(&train, opts.imputer)?;
        train = imputer.transform(&train)?;
        test = imputer.transform(&test)?;
    }
    let train = train.select_features(features)?;
    let test = test.select_features(features)?;
    let plan = ResamplePlan {
        mode: opts.resample,
        seed: resample_seed(opts.seed, fold),
    };
    Ok(FoldData {
        train: plan.apply(&train)?,
        test,
    })
}

/// The tables one fold trains and tests on.
pub fn prepare_fold(table: &DataTable, features: &[String], opts: &CvOptions, fold: usize) -> Result<FoldData> {
    let (base, plan) = prepare(table, opts)?;
    if fold >= opts.fold_count {
        return Err(Error::InvalidArgument(format!("fold {fold} out of range")));
    }
    fold_data(&base, &plan, fold, features, opts)
}

struct FoldOutput {
    result: FoldResult,
    scores: Vec<f64>,
    truth: Vec<bool>,
}

pub fn cross_validate(table: &DataTable, spec: &ModelSpec, features: &[String], opts: &CvOptions) -> Result<EvalReport> {
    spec.validate()?;
    opts.imputer.validate()?;
    let labels = table.require_labels()?;
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let binary = classes.len() == 2;
    let positive = if binary {
        let p = opts.positive_class.or_else(|| majority_class(labels)).expect("labels present");
        if !classes.contains(&p) {
            return Err(Error::InvalidArgument(format!("positive class {p} not among labels {classes:?}")));
        }
        Some(p)
    } else {
        None
    };
    let threshold = opts.threshold.unwrap_or_else(|| spec.family.default_threshold());
    let (base, plan) = prepare(table, opts)?;

    let outputs: Vec<Result<FoldOutput>> = (0..opts.fold_count)
        .into_par_iter()
        .map(|fold| {
            run_fold(&base, &plan, fold, spec, features, opts, &classes, positive, threshold)
                .map_err(|e| Error::Fold {
                    fold,
                    source: Box::new(e),
                })
        })
        .collect();
    let outputs: Vec<FoldOutput> = outputs.into_iter().collect::<Result<_>>()?;

    let collect = |f: fn(&FoldResult) -> Option<f64>| -> Option<Aggregate> {
        let v: Option<Vec<f64>> = outputs.iter().map(|o| f(&o.result)).collect();
        v.map(|v| Aggregate::of(&v))
    };
    let accuracy = Aggregate::of(&outputs.iter().map(|o| o.result.accuracy).collect::<Vec<_>>());
    let sensitivity = collect(|r| r.sensitivity);
    let specificity = collect(|r| r.specificity);
    let auc = collect(|r| r.auc);
    let (pooled_roc, pooled_auc) = if binary {
        let scores: Vec<f64> = outputs.iter().flat_map(|o| o.scores.iter().copied()).collect();
        let truth: Vec<bool> = outputs.iter().flat_map(|o| o.truth.iter().copied()).collect();
        let (pts, a) = roc_auc(&scores, &truth)?;
        (Some(pts), Some(a))
    } else {
        (None, None)
    };

    Ok(EvalReport {
        family: spec.family,
        spec: spec.clone(),
        features: features.to_vec(),
        fold_count: opts.fold_count,
        seed: opts.seed,
        split_seed: split_seed(opts.seed),
        resample: opts.resample,
        impute: opts.impute,
        classes,
        positive_class: positive,
        threshold,
        folds: outputs.into_iter().map(|o| o.result).collect(),
        accuracy,
        sensitivity,
        specificity,
        auc,
        pooled_roc,
        pooled_auc,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    base: &DataTable,
    plan: &SplitPlan,
    fold: usize,
    spec: &ModelSpec,
    features: &[String],
    opts: &CvOptions,
    classes: &[usize],
    positive: Option<usize>,
    threshold: f64,
) -> Result<FoldOutput> {
    let data = fold_data(base, plan, fold, features, opts)?;
    let mut fold_spec = spec.clone();
    fold_spec.seed = model_seed(spec.seed, fold);
    let x_train = data.train.to_matrix()?;
    let x_test = data.test.to_matrix()?;
    let y_train = data.train.require_labels()?;
    let y_test = data.test.require_labels()?;
    let model = fit_named(&fold_spec, &x_train, y_train, features.to_vec())?;
    if model.classes != classes {
        return Err(Error::InvalidArgument(format!(
            "training fold holds classes {:?}, expected {classes:?}",
            model.classes
        )));
    }
    let scores = model.predict_scores(&x_test)?;
    let pos_of = |c: usize| classes.binary_search(&c).expect("known class");

    let mut result = FoldResult {
        fold,
        train_rows: data.train.n_rows(),
        test_rows: data.test.n_rows(),
        resample_seed: resample_seed(opts.seed, fold),
        model_seed: fold_spec.seed,
        accuracy: 0.0,
        sensitivity: None,
        specificity: None,
        auc: None,
        counts: None,
        confusion: ConfusionMatrix { counts: Vec::new() },
        roc: None,
    };
    let (pos_scores, truth) = match positive {
        Some(p) => {
            let pred = model.predict_labels_for(&x_test, p, Some(threshold))?;
            let counts = ConfusionCounts::tally(&pred, y_test, p)?;
            let m = binary_metrics(&counts)?;
            let pi = pos_of(p);
            let s: Vec<f64> = scores.iter().map(|r| r[pi]).collect();
            let t: Vec<bool> = y_test.iter().map(|&y| y == p).collect();
            let (roc, a) = roc_auc(&s, &t)?;
            result.accuracy = m.accuracy.value();
            result.sensitivity = Some(m.sensitivity.value());
            result.specificity = Some(m.specificity.value());
            result.auc = Some(a);
            result.counts = Some(counts);
            result.roc = Some(roc);
            result.confusion = confusion_matrix(
                &pred.iter().map(|&c| pos_of(c)).collect::<Vec<_>>(),
                &y_test.iter().map(|&c| pos_of(c)).collect::<Vec<_>>(),
                classes.len(),
            )?;
            (s, t)
        }
        None => {
            let pred = model.predict_labels(&x_test, None)?;
            let cm = confusion_matrix(
                &pred.iter().map(|&c| pos_of(c)).collect::<Vec<_>>(),
                &y_test.iter().map(|&c| pos_of(c)).collect::<Vec<_>>(),
                classes.len(),
            )?;
            result.accuracy = cm.accuracy()?.value();
            result.confusion = cm;
            (Vec::new(), Vec::new())
        }
    };
    Ok(FoldOutput {
        result,
        scores: pos_scores,
        truth,
    })
}
