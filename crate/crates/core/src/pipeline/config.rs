//! Experiment configuration (JSON).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cv::{CvOptions, ImputeScope};
use crate::error::{Error, Result};
use crate::importance::{ImportanceMethod, DEFAULT_IMPORTANCE_TREES};
use crate::impute::ImputerConfig;
use crate::models::{Family, HyperValue, ModelSpec};
use crate::rebalance::{BinSpec, ResampleMode};
use crate::tuning::{SearchMetric, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    LastStatus,
    IcuNeeded,
    VentilatedDays,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::LastStatus, Outcome::IcuNeeded, Outcome::VentilatedDays];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::LastStatus => "last_status",
            Outcome::IcuNeeded => "icu_needed",
            Outcome::VentilatedDays => "ventilated_days",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    Oversampled,
    Undersampled,
}

impl Variant {
    pub fn mode(self) -> ResampleMode {
        match self {
            Variant::Original => ResampleMode::None,
            Variant::Oversampled => ResampleMode::Oversample,
            Variant::Undersampled => ResampleMode::Undersample,
        }
    }
}

/// Random-search settings for the `search` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub family: Family,
    /// Number of top-ranked features to search on.
    pub top_k: usize,
    pub space: SearchSpace,
    #[serde(default)]
    pub metric: SearchMetric,
}

pub const DEFAULT_TOP_K: [usize; 6] = [3, 4, 5, 6, 8, 10];
pub const DEFAULT_BINARY_MODELS: [Family; 7] = [
    Family::Rf,
    Family::Logistic,
    Family::Svm,
    Family::Knn,
    Family::Gboost,
    Family::Lda,
    Family::Gnb,
];

fn default_top_k() -> Vec<usize> {
    DEFAULT_TOP_K.to_vec()
}

fn default_fold_count() -> usize {
    5
}

fn default_importance_trees() -> usize {
    DEFAULT_IMPORTANCE_TREES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// CSV path, relative to the config file.
    pub dataset: PathBuf,
    /// Schema JSON path, relative to the config file.
    pub schema: PathBuf,
    pub outcome: Outcome,
    /// Defaults to the outcome name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    /// Extra header columns to drop. The other outcome columns are always
    /// dropped.
    #[serde(default)]
    pub ignore_columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_map: Option<BTreeMap<String, usize>>,
    /// Defaults to `oversampled` for ventilation days, `original` otherwise.
    #[serde(default)]
    pub dataset_variant: Option<Variant>,
    #[serde(default)]
    pub bin_count: Option<usize>,
    #[serde(default)]
    pub feature_selector: ImportanceMethod,
    #[serde(default = "default_importance_trees")]
    pub importance_trees: usize,
    #[serde(default = "default_top_k")]
    pub top_k: Vec<usize>,
    /// Defaults to `[dnn]` for ventilation days and the seven classical
    /// families otherwise.
    #[serde(default)]
    pub models: Option<Vec<Family>>,
    #[serde(default)]
    pub hyperparameters: BTreeMap<Family, BTreeMap<String, HyperValue>>,
    #[serde(default = "default_fold_count")]
    pub fold_count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub impute_scope: ImputeScope,
    #[serde(default)]
    pub imputer: ImputerConfig,
    #[serde(default)]
    pub positive_class: Option<usize>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config and resolves `dataset`, `schema` and `output_dir`
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg = Self::from_json_str(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn label_column(&self) -> &str {
        self.label_column.as_deref().unwrap_or(self.outcome.as_str())
    }

    pub fn variant(&self) -> Variant {
        self.dataset_variant.unwrap_or(match self.outcome {
            Outcome::VentilatedDays => Variant::Oversampled,
            _ => Variant::Original,
        })
    }

    pub fn models(&self) -> Vec<Family> {
        self.models.clone().unwrap_or_else(|| match self.outcome {
            Outcome::VentilatedDays => vec![Family::Dnn],
            _ => DEFAULT_BINARY_MODELS.to_vec(),
        })
    }

    pub fn bin_spec(&self) -> Result<Option<BinSpec>> {
        match (self.outcome, self.bin_count) {
            (Outcome::VentilatedDays, Some(b)) => BinSpec::new(b).map(Some),
            (Outcome::VentilatedDays, None) => Err(Error::Config("ventilated_days requires bin_count".into())),
            (_, Some(_)) => Err(Error::Config("bin_count applies to ventilated_days only".into())),
            (_, None) => Ok(None),
        }
    }

    /// Defaults made explicit, output location dropped: the form echoed into
    /// reports.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.dataset_variant = Some(self.variant());
        c.models = Some(self.models());
        c.output_dir = None;
        c
    }

    pub fn spec(&self, family: Family, seed: u64) -> Result<ModelSpec> {
        ModelSpec::new(family, self.hyperparameters.get(&family).cloned().unwrap_or_default(), seed)
    }

    pub fn cv_options(&self) -> CvOptions {
        CvOptions {
            fold_count: self.fold_count,
            seed: self.seed,
            resample: self.variant().mode(),
            impute: Some(self.impute_scope),
            imputer: self.imputer,
            positive_class: self.positive_class,
            threshold: self.threshold,
        }
    }

    /// Checks that need no data. `feature_count` enables the top-k bound.
    pub fn validate(&self, feature_count: Option<usize>) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        let models = self.models();
        if models.is_empty() {
            return err("models list is empty".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &models {
            if !seen.insert(*m) {
                return err(format!("model {m} listed twice"));
            }
        }
        if self.top_k.is_empty() {
            return err("top_k list is empty".into());
        }
        if self.top_k.contains(&0) {
            return err("top_k values must be at least 1".into());
        }
        if let Some(d) = feature_count {
            if let Some(k) = self.top_k.iter().find(|&&k| k > d) {
                return err(format!("top_k {k} exceeds the {d} available features"));
            }
        }
        if self.fold_count < 2 {
            return err("fold_count must be at least 2".into());
        }
        if self.importance_trees == 0 {
            return err("importance_trees must be at least 1".into());
        }
        self.imputer.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(t) = self.threshold {
            if !t.is_finite() {
                return err("threshold must be finite".into());
            }
        }
        let bins = self.bin_spec()?;
        for &m in &models {
            if bins.is_some() && m.binary_only() {
                return err(format!("{m} is binary-only and cannot predict binned ventilation days"));
            }
            self.spec(m, 0)?;
        }
        for f in self.hyperparameters.keys() {
            if !models.contains(f) {
                return err(format!("hyperparameters given for {f}, which is not in models"));
            }
        }
        if let Some(s) = &self.search {
            if let Some(d) = feature_count {
                if s.top_k == 0 || s.top_k > d {
                    return err(format!("search.top_k {} outside 1..={d}", s.top_k));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"dataset": "d.csv", "schema": "s.json", "outcome": "last_status"}"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(c.top_k, vec![3, 4, 5, 6, 8, 10]);
        assert_eq!(c.fold_count, 5);
        assert_eq!(c.variant(), Variant::Original);
        assert_eq!(c.models().len(), 7);
        assert_eq!(c.label_column(), "last_status");
        c.validate(Some(10)).unwrap();
        assert!(c.validate(Some(9)).is_err());
    }

    #[test]
    fn ventilation_defaults_and_rules() {
        let text = r#"{"dataset": "d.csv", "schema": "s.json", "outcome": "ventilated_days", "bin_count": 3}"#;
        let c = ExperimentConfig::from_json_str(text).unwrap();
        assert_eq!(c.variant(), Variant::Oversampled);
        assert_eq!(c.models(), vec![Family::Dnn]);
        c.validate(None).unwrap();
        let mut no_bins = c.clone();
        no_bins.bin_count = None;
        assert!(no_bins.validate(None).is_err());
        let mut svm = c;
        svm.models = Some(vec![Family::Svm]);
        assert!(svm.validate(None).is_err());
    }

    #[test]
    fn empty_models_and_unknown_fields_rejected() {
        let mut c = ExperimentConfig::from_json_str(MINIMAL).unwrap();
        c.models = Some(vec![]);
        assert!(matches!(c.validate(None), Err(Error::Config(_))));
        let typo = r#"{"dataset": "d.csv", "schema": "s.json", "outcome": "last_status", "topk": [3]}"#;
        assert!(ExperimentConfig::from_json_str(typo).is_err());
    }
}
