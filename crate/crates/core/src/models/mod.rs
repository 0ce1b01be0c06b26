//! The nine classifier families behind one `fit` / `predict_scores` surface.
//!
//! Every family trains on class indices `0..k` where index `i` is the `i`-th
//! smallest distinct label; score columns follow the same order.

mod forest;
mod gboost;
mod gnb;
mod knn;
mod lda;
mod logistic;
pub mod lstm;
pub mod nn;
mod svm;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use forest::RandomForestModel;
pub use gboost::{mean_deviance, GBoostModel, RegressionNode, RegressionTree};
pub use gnb::GnbModel;
pub use knn::{KnnModel, KnnWeights};
pub use lda::LdaModel;
pub use logistic::{LogisticModel, NewtonCgReport};
pub use lstm::LstmNet;
pub use nn::Mlp;
pub use svm::{SvmKernel, SvmModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Rf,
    Logistic,
    Svm,
    Knn,
    Gboost,
    Lda,
    Gnb,
    Dnn,
    Lstm,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Rf,
        Family::Logistic,
        Family::Svm,
        Family::Knn,
        Family::Gboost,
        Family::Lda,
        Family::Gnb,
        Family::Dnn,
        Family::Lstm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Rf => "rf",
            Family::Logistic => "logistic",
            Family::Svm => "svm",
            Family::Knn => "knn",
            Family::Gboost => "gboost",
            Family::Lda => "lda",
            Family::Gnb => "gnb",
            Family::Dnn => "dnn",
            Family::Lstm => "lstm",
        }
    }

    /// Families whose score rows are probability distributions.
    pub fn is_probabilistic(self) -> bool {
        self != Family::Svm
    }

    pub fn binary_only(self) -> bool {
        matches!(self, Family::Logistic | Family::Svm | Family::Gboost)
    }

    /// Default decision threshold on the positive-class score.
    pub fn default_threshold(self) -> f64 {
        if self.is_probabilistic() {
            0.5
        } else {
            0.0
        }
    }

    /// Default hyperparameters of the reference configuration; values it does
    /// not name are explicit stand-ins.
    pub fn defaults(self) -> BTreeMap<String, HyperValue> {
        use HyperValue::*;
        let pairs: Vec<(&str, HyperValue)> = match self {
            Family::Rf => vec![
                ("n_estimators", Int(50)),
                ("criterion", Text("entropy".into())),
                ("max_depth", Int(10)),
                ("min_samples_split", Int(8)),
                ("min_samples_leaf", Int(1)),
                ("max_features", Text("sqrt".into())),
                ("bootstrap", Bool(true)),
            ],
            Family::Logistic => vec![
                ("penalty", Text("l2".into())),
                ("C", Float(1.0)),
                ("solver", Text("newton-cg".into())),
                ("max_iter", Int(20)),
                ("tol", Float(1e-4)),
            ],
            Family::Svm => vec![
                ("kernel", Text("rbf".into())),
                ("degree", Int(3)),
                ("gamma", Text("auto".into())),
                ("coef0", Float(0.0)),
                ("C", Float(1.0)),
                ("tol", Float(1e-3)),
                ("max_iter", Int(1_000_000)),
            ],
            Family::Knn => vec![
                ("n_neighbors", Int(7)),
                ("weights", Text("distance".into())),
                ("algorithm", Text("auto".into())),
                ("leaf_size", Int(10)),
                ("metric", Text("minkowski".into())),
                ("p", Float(2.0)),
            ],
            Family::Gboost => vec![
                ("n_estimators", Int(100)),
                ("learning_rate", Float(1.0)),
                ("max_depth", Int(2)),
                ("min_samples_split", Int(5)),
                ("min_samples_leaf", Int(4)),
                ("loss", Text("deviance".into())),
            ],
            Family::Lda => vec![
                ("n_components", Null),
                ("solver", Text("svd".into())),
                ("tol", Float(1e-4)),
            ],
            Family::Gnb => vec![("var_smoothing", Float(1e-9))],
            Family::Dnn => vec![
                ("hidden_layers", IntList(vec![64, 32])),
                ("learning_rate", Float(1e-3)),
                ("batch_size", Int(32)),
                ("epochs", Int(500)),
                ("patience", Int(25)),
                ("min_rel_improvement", Float(1e-6)),
            ],
            Family::Lstm => vec![
                ("hidden_size", Int(64)),
                ("learning_rate", Float(1e-3)),
                ("batch_size", Int(32)),
                ("epochs", Int(500)),
                ("patience", Int(25)),
                ("min_rel_improvement", Float(1e-6)),
                ("forget_bias", Float(1.0)),
            ],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model family {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    IntList(Vec<i64>),
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperValue::Null => f.write_str("None"),
            HyperValue::Bool(b) => write!(f, "{b}"),
            HyperValue::Int(i) => write!(f, "{i}"),
            HyperValue::Float(x) => write!(f, "{x}"),
            HyperValue::Text(s) => write!(f, "{s:?}"),
            HyperValue::IntList(v) => write!(f, "{v:?}"),
        }
    }
}

/// Model family plus a complete hyperparameter map and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub hyperparameters: BTreeMap<String, HyperValue>,
    pub seed: u64,
}

impl ModelSpec {
    /// Family defaults, no overrides.
    pub fn defaults(family: Family, seed: u64) -> Self {
        Self {
            family,
            hyperparameters: family.defaults(),
            seed,
        }
    }

    /// Defaults overlaid with `overrides`. Unknown names and ill-typed values
    /// are rejected here rather than at fit time.
    pub fn new(family: Family, overrides: BTreeMap<String, HyperValue>, seed: u64) -> Result<Self> {
        let mut spec = Self::defaults(family, seed);
        for (k, v) in overrides {
            spec = spec.with(&k, v)?;
        }
        Ok(spec)
    }

    pub fn with(mut self, name: &str, value: HyperValue) -> Result<Self> {
        if !self.hyperparameters.contains_key(name) {
            return Err(Error::UnknownHyperparameter {
                family: self.family.to_string(),
                name: name.to_string(),
            });
        }
        self.hyperparameters.insert(name.to_string(), value);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for name in self.hyperparameters.keys() {
            if !self.family.defaults().contains_key(name) {
                return Err(Error::UnknownHyperparameter {
                    family: self.family.to_string(),
                    name: name.clone(),
                });
            }
        }
        match self.family {
            Family::Rf => forest::RfParams::from_spec(self).map(drop),
            Family::Logistic => logistic::LogisticParams::from_spec(self).map(drop),
            Family::Svm => svm::SvmParams::from_spec(self).map(drop),
            Family::Knn => knn::KnnParams::from_spec(self).map(drop),
            Family::Gboost => gboost::GBoostParams::from_spec(self).map(drop),
            Family::Lda => lda::LdaParams::from_spec(self).map(drop),
            Family::Gnb => gnb::GnbParams::from_spec(self).map(drop),
            Family::Dnn => nn::MlpParams::from_spec(self).map(drop),
            Family::Lstm => lstm::LstmParams::from_spec(self).map(drop),
        }
    }

    pub(crate) fn get(&self, name: &str) -> &HyperValue {
        self.hyperparameters
            .get(name)
            .unwrap_or_else(|| panic!("hyperparameter {name} missing from a validated spec"))
    }

    pub(crate) fn f64(&self, name: &str) -> Result<f64> {
        match self.get(name) {
            HyperValue::Int(i) => Ok(*i as f64),
            HyperValue::Float(x) if x.is_finite() => Ok(*x),
            v => Err(bad(name, format!("expected a number, got {v}"))),
        }
    }

    pub(crate) fn positive_f64(&self, name: &str) -> Result<f64> {
        let v = self.f64(name)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(bad(name, format!("must be positive, got {v}")))
        }
    }

    pub(crate) fn usize(&self, name: &str) -> Result<usize> {
        match self.get(name) {
            HyperValue::Int(i) if *i >= 0 => Ok(*i as usize),
            HyperValue::Float(x) if *x >= 0.0 && x.fract() == 0.0 => Ok(*x as usize),
            v => Err(bad(name, format!("expected a non-negative integer, got {v}"))),
        }
    }

    pub(crate) fn positive_usize(&self, name: &str) -> Result<usize> {
        match self.usize(name)? {
            0 => Err(bad(name, "must be at least 1".into())),
            v => Ok(v),
        }
    }

    pub(crate) fn text(&self, name: &str) -> Result<&str> {
        match self.get(name) {
            HyperValue::Text(s) => Ok(s),
            v => Err(bad(name, format!("expected a string, got {v}"))),
        }
    }

    pub(crate) fn choice(&self, name: &str, allowed: &[&str]) -> Result<&str> {
        let s = self.text(name)?;
        if allowed.contains(&s) {
            Ok(s)
        } else {
            Err(bad(name, format!("{s:?} not one of {allowed:?}")))
        }
    }
}

pub(crate) fn bad(name: &str, reason: String) -> Error {
    Error::BadHyperparameter {
        name: name.to_string(),
        reason,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FittedParams {
    RandomForest(RandomForestModel),
    Logistic(LogisticModel),
    Svm(SvmModel),
    Knn(KnnModel),
    Gboost(GBoostModel),
    Lda(LdaModel),
    Gnb(GnbModel),
    Dnn(Mlp),
    Lstm(LstmNet),
}

/// Fitted model. Immutable; prediction is pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub classes: Vec<usize>,
    pub feature_names: Vec<String>,
    /// Per-iteration objective (loss, deviance) where the trainer has one.
    pub training_log: Vec<f64>,
    pub params: FittedParams,
}

/// Trains `spec` on a dense matrix. Labels may be any class ids; at least two
/// distinct values are required.
pub fn fit(spec: &ModelSpec, x: &Matrix, y: &[usize]) -> Result<TrainedModel> {
    let names = (0..x.cols()).map(|j| format!("x{j}")).collect();
    fit_named(spec, x, y, names)
}

pub fn fit_named(spec: &ModelSpec, x: &Matrix, y: &[usize], feature_names: Vec<String>) -> Result<TrainedModel> {
    spec.validate()?;
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if feature_names.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            got: feature_names.len(),
        });
    }
    x.ensure_finite()?;
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    if spec.family.binary_only() && classes.len() > 2 {
        return Err(Error::BinaryOnly {
            family: spec.family.to_string(),
            classes: classes.len(),
        });
    }
    let yi: Vec<usize> = y.iter().map(|l| classes.binary_search(l).expect("present")).collect();
    let k = classes.len();

    let (params, log) = match spec.family {
        Family::Rf => (
            FittedParams::RandomForest(forest::fit(&forest::RfParams::from_spec(spec)?, x, &yi, k, spec.seed)),
            Vec::new(),
        ),
        Family::Logistic => {
            let (m, report) = logistic::fit(&logistic::LogisticParams::from_spec(spec)?, x, &yi)?;
            (FittedParams::Logistic(m), report.objective)
        }
        Family::Svm => (FittedParams::Svm(svm::fit(&svm::SvmParams::from_spec(spec)?, x, &yi)?), Vec::new()),
        Family::Knn => (FittedParams::Knn(knn::fit(&knn::KnnParams::from_spec(spec)?, x, &yi, k)), Vec::new()),
        Family::Gboost => {
            let (m, log) = gboost::fit(&gboost::GBoostParams::from_spec(spec)?, x, &yi);
            (FittedParams::Gboost(m), log)
        }
        Family::Lda => (FittedParams::Lda(lda::fit(&lda::LdaParams::from_spec(spec)?, x, &yi, k)?), Vec::new()),
        Family::Gnb => (FittedParams::Gnb(gnb::fit(&gnb::GnbParams::from_spec(spec)?, x, &yi, k)), Vec::new()),
        Family::Dnn => {
            let (m, log) = nn::train(&nn::MlpParams::from_spec(spec)?, x, &yi, k, spec.seed)?;
            (FittedParams::Dnn(m), log)
        }
        Family::Lstm => {
            let (m, log) = lstm::train(&lstm::LstmParams::from_spec(spec)?, x, &yi, k, spec.seed)?;
            (FittedParams::Lstm(m), log)
        }
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        classes,
        feature_names,
        training_log: log,
        params,
    })
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// One row of per-class scores per input row. Probabilistic families
    /// return distributions; the SVM returns `[-f(x), f(x)]`.
    pub fn predict_scores(&self, x: &Matrix) -> Result<Vec<Vec<f64>>> {
        if x.cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.cols(),
            });
        }
        Ok(x.iter_rows().map(|r| self.score_row(r)).collect())
    }

    fn score_row(&self, row: &[f64]) -> Vec<f64> {
        match &self.params {
            FittedParams::RandomForest(m) => m.predict_distribution(row),
            FittedParams::Logistic(m) => {
                let p = m.probability(row);
                vec![1.0 - p, p]
            }
            FittedParams::Svm(m) => {
                let f = m.decision_value(row);
                vec![-f, f]
            }
            FittedParams::Knn(m) => m.predict_distribution(row),
            FittedParams::Gboost(m) => {
                let p = m.probability(row);
                vec![1.0 - p, p]
            }
            FittedParams::Lda(m) => m.predict_distribution(row),
            FittedParams::Gnb(m) => m.predict_distribution(row),
            FittedParams::Dnn(m) => m.predict_distribution(row),
            FittedParams::Lstm(m) => m.predict_distribution(row),
        }
    }

    /// Binary: the larger class id is positive when its score reaches
    /// `threshold` (family default when `None`); ties go positive.
    /// Multiclass: argmax, ties to the lower class.
    pub fn predict_labels(&self, x: &Matrix, threshold: Option<f64>) -> Result<Vec<usize>> {
        let positive = *self.classes.last().expect("two or more classes");
        self.predict_labels_for(x, positive, threshold)
    }

    /// Like `predict_labels` with an explicit positive class.
    pub fn predict_labels_for(&self, x: &Matrix, positive: usize, threshold: Option<f64>) -> Result<Vec<usize>> {
        let scores = self.predict_scores(x)?;
        if self.classes.len() == 2 {
            let p = self.class_index(positive)?;
            let t = threshold.unwrap_or_else(|| self.family().default_threshold());
            let other = self.classes[1 - p];
            return Ok(scores
                .iter()
                .map(|s| if s[p] >= t { positive } else { other })
                .collect());
        }
        Ok(scores
            .iter()
            .map(|s| {
                let mut best = 0;
                for (i, &v) in s.iter().enumerate() {
                    if v > s[best] {
                        best = i;
                    }
                }
                self.classes[best]
            })
            .collect())
    }

    pub fn class_index(&self, class: usize) -> Result<usize> {
        self.classes
            .binary_search(&class)
            .map_err(|_| Error::InvalidArgument(format!("class {class} not seen in training")))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "model format version {} not supported",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in v.iter_mut() {
        *x /= s;
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
