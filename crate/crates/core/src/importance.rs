//! Impurity-based feature ranking with extra-trees or random-forest
//! ensembles, and top-k selection.

use serde::{Deserialize, Serialize};

use crate::data::DataTable;
use crate::error::{Error, Result};
use crate::tree::{sqrt_features, Criterion, Forest, ForestParams, Splitter, TreeParams};

pub const DEFAULT_IMPORTANCE_TREES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    #[default]
    ExtraTrees,
    RandomForest,
}

impl ImportanceMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ImportanceMethod::ExtraTrees => "extra_trees",
            ImportanceMethod::RandomForest => "random_forest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
}

/// Importances sorted descending, ties by feature name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub method: ImportanceMethod,
    pub tree_count: usize,
    pub seed: u64,
    pub entries: Vec<FeatureImportance>,
}

impl ImportanceVector {
    pub fn get(&self, feature: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.feature == feature).map(|e| e.importance)
    }

    pub fn select_top_k(&self, k: usize) -> Result<Vec<String>> {
        select_top_k(self, k)
    }
}

/// Mean decrease in Gini impurity.
///
/// Extra-trees draw one uniform threshold per candidate feature and use every
/// row; random-forest searches best thresholds on bootstrap samples. Both
/// examine `ceil(sqrt(d))` features per node, grow to full depth and keep
/// leaves of at least one row.
///
/// Columns are processed in name order internally, so permuting the input
/// columns permutes the result and nothing else.
pub fn impurity_importance(
    table: &DataTable,
    method: ImportanceMethod,
    tree_count: usize,
    seed: u64,
) -> Result<ImportanceVector> {
    let labels = table.require_labels()?;
    if table.n_rows() == 0 {
        return Err(Error::InvalidArgument("cannot rank features of an empty table".into()));
    }
    if tree_count == 0 {
        return Err(Error::InvalidArgument("tree_count must be positive".into()));
    }
    let names: Vec<String> = table.schema().names().into_iter().map(str::to_string).collect();
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));
    let x = table.to_matrix()?.select_cols(&order);

    // compact class ids
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let y: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("present"))
        .collect();

    let params = ForestParams {
        n_trees: tree_count,
        tree: TreeParams {
            criterion: Criterion::Gini,
            splitter: match method {
                ImportanceMethod::ExtraTrees => Splitter::Random,
                ImportanceMethod::RandomForest => Splitter::Best,
            },
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: sqrt_features(x.cols()),
        },
        bootstrap: method == ImportanceMethod::RandomForest,
    };
    let (_, imp) = Forest::fit(&x, &y, classes.len(), &params, seed);

    let mut entries: Vec<FeatureImportance> = order
        .iter()
        .zip(imp)
        .map(|(&j, importance)| FeatureImportance {
            feature: names[j].clone(),
            importance,
        })
        .collect();
    entries.sort_by(|a, b| b.importance.total_cmp(&a.importance).then_with(|| a.feature.cmp(&b.feature)));
    Ok(ImportanceVector {
        method,
        tree_count,
        seed,
        entries,
    })
}

pub fn select_top_k(importance: &ImportanceVector, k: usize) -> Result<Vec<String>> {
    if k == 0 || k > importance.entries.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            importance.entries.len()
        )));
    }
    Ok(importance.entries[..k].iter().map(|e| e.feature.clone()).collect())
}
