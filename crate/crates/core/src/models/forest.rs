use serde::{Deserialize, Serialize};

use super::{bad, HyperValue, ModelSpec};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::tree::{sqrt_features, Criterion, Forest, ForestParams, Splitter, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct RfParams {
    n_estimators: usize,
    criterion: Criterion,
    max_depth: Option<usize>,
    min_samples_split: usize,
    min_samples_leaf: usize,
    max_features: MaxFeatures,
    bootstrap: bool,
}

impl RfParams {
    pub(crate) fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let criterion = match spec.choice("criterion", &["gini", "entropy"])? {
            "gini" => Criterion::Gini,
            _ => Criterion::Entropy,
        };
        let max_depth = match spec.get("max_depth") {
            HyperValue::Null => None,
            _ => Some(spec.usize("max_depth")?),
        };
        let max_features = match spec.get("max_features") {
            HyperValue::Text(s) if s == "sqrt" => MaxFeatures::Sqrt,
            HyperValue::Null => MaxFeatures::All,
            HyperValue::Int(_) => MaxFeatures::Count(spec.positive_usize("max_features")?),
            v => return Err(bad("max_features", format!("expected \"sqrt\", null or a count, got {v}"))),
        };
        let bootstrap = match spec.get("bootstrap") {
            HyperValue::Bool(b) => *b,
            v => return Err(bad("bootstrap", format!("expected a bool, got {v}"))),
        };
        Ok(Self {
            n_estimators: spec.positive_usize("n_estimators")?,
            criterion,
            max_depth,
            min_samples_split: spec.positive_usize("min_samples_split")?.max(2),
            min_samples_leaf: spec.positive_usize("min_samples_leaf")?,
            max_features,
            bootstrap,
        })
    }
}

/// Bagged best-split trees; scores are mean leaf class frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub forest: Forest,
}

impl RandomForestModel {
    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        self.forest.predict_distribution(row)
    }
}

pub(crate) fn fit(p: &RfParams, x: &Matrix, y: &[usize], n_classes: usize, seed: u64) -> RandomForestModel {
    let d = x.cols();
    let max_features = match p.max_features {
        MaxFeatures::Sqrt => sqrt_features(d),
        MaxFeatures::All => d,
        MaxFeatures::Count(c) => c.min(d),
    };
    let params = ForestParams {
        n_trees: p.n_estimators,
        tree: TreeParams {
            criterion: p.criterion,
            splitter: Splitter::Best,
            max_depth: p.max_depth,
            min_samples_split: p.min_samples_split,
            min_samples_leaf: p.min_samples_leaf,
            max_features,
        },
        bootstrap: p.bootstrap,
    };
    let (forest, _) = Forest::fit(x, y, n_classes, &params, seed);
    RandomForestModel { forest }
}
