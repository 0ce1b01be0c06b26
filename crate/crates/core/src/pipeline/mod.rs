//! Config-driven experiment runner.
//!
//! Stages: ingest, binning (ventilation days only), boolean fill and
//! whole-table KNN imputation for ranking, feature ranking, then
//! cross-validation of every (top-k, family) pair. Artifacts are rendered in
//! memory and written at the end; a failed write removes what was written.

mod artifacts;
mod config;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::cv::{cross_validate, EvalReport};
use crate::data::{parse_csv_with, write_csv_writer, CsvOptions, DataTable, FeatureSchema};
use crate::error::{Error, Result};
use crate::importance::{impurity_importance, ImportanceVector};
use crate::impute::{fill_boolean, knn_impute};
use crate::metrics::ConfusionMatrix;
use crate::models::Family;
use crate::rebalance::{bin_table_labels, BinSpec, ResamplePlan};
use crate::rng::derive_seed;
use crate::tuning::{random_search, SearchResult};

pub use artifacts::{
    read_confusion_csv, read_report_json, render_confusion_csv, render_roc_svg, report_json, roc_series,
    write_report_json, DatasetSummary, ExperimentReport, ResultEntry, RocSeries, SeedRecord,
    REPORT_SCHEMA_VERSION,
};
pub use config::{
    ExperimentConfig, Outcome, SearchConfig, Variant, DEFAULT_BINARY_MODELS, DEFAULT_TOP_K,
};

/// A loaded config plus the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

/// Rendered artifacts, by file name, in write order.
pub type Artifacts = Vec<(String, Vec<u8>)>;

impl Experiment {
    pub fn new(config: ExperimentConfig, base_dir: impl Into<PathBuf>) -> Self {
        Self {
            config,
            base_dir: base_dir.into(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let (config, base_dir) = ExperimentConfig::load(path)?;
        Ok(Self { config, base_dir })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// `output_dir` from the config, or `out` under the config directory.
    pub fn output_dir(&self) -> PathBuf {
        self.resolve(self.config.output_dir.as_deref().unwrap_or(Path::new("out")))
    }

    pub fn importance_seed(&self) -> u64 {
        derive_seed(self.config.seed, "importance", 0)
    }

    pub fn model_seed(&self, family: Family, k: usize) -> u64 {
        derive_seed(self.config.seed, family.as_str(), k as u64)
    }

    /// Schema and CSV, labels from the outcome column (raw, before binning).
    pub fn ingest(&self) -> Result<DataTable> {
        let cfg = &self.config;
        let (schema_path, data_path) = (self.resolve(&cfg.schema), self.resolve(&cfg.dataset));
        for p in [&schema_path, &data_path] {
            if !p.is_file() {
                return Err(Error::Config(format!("{} is not a readable file", p.display())));
            }
        }
        let schema = FeatureSchema::load_json(&schema_path)?;
        cfg.validate(Some(schema.len()))?;
        let label = cfg.label_column().to_string();
        let mut ignore: Vec<String> = Outcome::ALL
            .iter()
            .map(|o| o.as_str().to_string())
            .filter(|o| *o != label)
            .collect();
        ignore.extend(cfg.ignore_columns.iter().cloned());
        let opts = CsvOptions {
            label_column: Some(label),
            ignore_columns: ignore,
            label_map: cfg.label_map.clone(),
        };
        parse_csv_with(&data_path, &schema, &opts)
    }

    /// Ingest plus week binning when the outcome is ventilation days.
    pub fn labeled_table(&self) -> Result<(DataTable, Option<BinSpec>)> {
        let raw = self.ingest().map_err(|e| e.in_stage("ingest"))?;
        match self.config.bin_spec().map_err(|e| e.in_stage("config"))? {
            Some(b) => Ok((bin_table_labels(raw, b).map_err(|e| e.in_stage("binning"))?, Some(b))),
            None => Ok((raw, None)),
        }
    }

    /// Boolean fill, then KNN imputation over the whole table.
    pub fn impute_whole(&self, table: &DataTable) -> Result<DataTable> {
        knn_impute(&fill_boolean(table), self.config.imputer).map_err(|e| e.in_stage("impute"))
    }

    pub fn rank(&self, imputed: &DataTable) -> Result<ImportanceVector> {
        impurity_importance(
            imputed,
            self.config.feature_selector,
            self.config.importance_trees,
            self.importance_seed(),
        )
        .map_err(|e| e.in_stage("rank"))
    }

    /// Cross-validates every (top-k, family) pair in config order.
    pub fn evaluate(&self, table: &DataTable, ranking: &ImportanceVector) -> Result<Vec<ResultEntry>> {
        let cfg = &self.config;
        let tasks: Vec<(usize, Family)> = cfg
            .top_k
            .iter()
            .flat_map(|&k| cfg.models().into_iter().map(move |m| (k, m)))
            .collect();
        let opts = cfg.cv_options();
        let results: Vec<Result<ResultEntry>> = tasks
            .par_iter()
            .map(|&(k, family)| {
                let features = ranking.select_top_k(k)?;
                let spec = cfg.spec(family, self.model_seed(family, k))?;
                let report = cross_validate(table, &spec, &features, &opts)?;
                log::info!("{family} top {k}: accuracy {}", report.accuracy.display());
                Ok(ResultEntry::new(family, k, report))
            })
            .collect();
        results
            .into_iter()
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_stage("cross_validate"))
    }

    fn report(&self, table: &DataTable, bins: Option<BinSpec>, ranking: ImportanceVector, results: Vec<ResultEntry>) -> ExperimentReport {
        let counts = table.class_counts().unwrap_or_default();
        ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config: self.config.resolved(),
            seeds: SeedRecord {
                base: self.config.seed,
                split: crate::cv::split_seed(self.config.seed),
                importance: self.importance_seed(),
                models: results
                    .iter()
                    .map(|r| (format!("{}_{}", r.model, r.top_k), r.evaluation.spec.seed))
                    .collect(),
            },
            dataset: DatasetSummary {
                rows: table.n_rows(),
                features: table.n_cols(),
                missing_cells: table.missing_count(),
                class_counts: counts.into_iter().enumerate().filter(|&(_, n)| n > 0).collect(),
                class_names: bins.map(|b| b.labels()).or_else(|| {
                    let map = self.config.label_map.as_ref()?;
                    let top = *map.values().max()?;
                    let mut names = vec![String::new(); top + 1];
                    for (name, &id) in map {
                        names[id] = name.clone();
                    }
                    Some(names)
                }),
            },
            importance: Some(ranking),
            results,
        }
    }

    /// The whole experiment: report, ROC plots (binary outcomes), confusion
    /// matrices (binned outcomes) and the importance vector, written under
    /// `out`.
    pub fn run(&self, out: &Path) -> Result<ExperimentReport> {
        let (report, artifacts) = self.run_in_memory(true)?;
        write_artifacts(out, &artifacts)?;
        Ok(report)
    }

    /// Cross-validation only: writes `report.json`.
    pub fn run_cv(&self, out: &Path) -> Result<ExperimentReport> {
        let (report, artifacts) = self.run_in_memory(false)?;
        write_artifacts(out, &artifacts)?;
        Ok(report)
    }

    pub fn run_in_memory(&self, all_artifacts: bool) -> Result<(ExperimentReport, Artifacts)> {
        self.config.validate(None).map_err(|e| e.in_stage("config"))?;
        let (table, bins) = self.labeled_table()?;
        log::info!("ingested {} rows x {} features", table.n_rows(), table.n_cols());
        let imputed = self.impute_whole(&table)?;
        let ranking = self.rank(&imputed)?;
        log::info!("ranked features with {}", ranking.method.as_str());
        let results = self.evaluate(&table, &ranking)?;
        let report = self.report(&table, bins, ranking.clone(), results);

        let mut files: Artifacts = vec![("report.json".into(), report_json(&report).map_err(|e| e.in_stage("report"))?)];
        if all_artifacts {
            for r in &report.results {
                let series = roc_series(&r.evaluation);
                if !series.is_empty() {
                    let svg = render_roc_svg(&format!("{} top {}", r.model, r.top_k), &series)
                        .map_err(|e| e.in_stage("report"))?;
                    files.push((format!("roc_{}_{}.svg", r.model, r.top_k), svg.into_bytes()));
                }
            }
            if let Some(b) = bins {
                let single = report.config.models().len() == 1;
                for r in &report.results {
                    let m = pooled_confusion(&r.evaluation, b.bin_count());
                    let csv = render_confusion_csv(&m, &b.labels()).map_err(|e| e.in_stage("report"))?;
                    let name = if single {
                        format!("confusion_{}_{}.csv", b.bin_count(), r.top_k)
                    } else {
                        format!("confusion_{}_{}_{}.csv", b.bin_count(), r.top_k, r.model)
                    };
                    files.push((name, csv.into_bytes()));
                }
            }
            files.push((
                format!("importance_{}.json", ranking.method.as_str()),
                to_json_bytes(&ranking).map_err(|e| e.in_stage("report"))?,
            ));
        }
        Ok((report, files))
    }

    /// Writes `imputed.csv`: boolean fill plus whole-table KNN imputation.
    pub fn run_impute(&self, out: &Path) -> Result<DataTable> {
        let table = self.ingest().map_err(|e| e.in_stage("ingest"))?;
        let imputed = self.impute_whole(&table)?;
        write_artifacts(out, &[("imputed.csv".into(), self.csv_bytes(&imputed)?)])?;
        Ok(imputed)
    }

    /// Writes `resampled.csv`: the imputed table under the configured
    /// variant.
    pub fn run_resample(&self, out: &Path) -> Result<DataTable> {
        let (table, _) = self.labeled_table()?;
        let imputed = self.impute_whole(&table)?;
        let plan = ResamplePlan {
            mode: self.config.variant().mode(),
            seed: derive_seed(self.config.seed, "resample", 0),
        };
        let resampled = plan.apply(&imputed).map_err(|e| e.in_stage("resample"))?;
        write_artifacts(out, &[("resampled.csv".into(), self.csv_bytes(&resampled)?)])?;
        Ok(resampled)
    }

    /// Writes `importance_<selector>.json`.
    pub fn run_rank(&self, out: &Path) -> Result<ImportanceVector> {
        let (table, _) = self.labeled_table()?;
        let ranking = self.rank(&self.impute_whole(&table)?)?;
        let bytes = to_json_bytes(&ranking)?;
        write_artifacts(out, &[(format!("importance_{}.json", ranking.method.as_str()), bytes)])?;
        Ok(ranking)
    }

    /// Writes `search.json` for the config's `search` section.
    pub fn run_search(&self, out: &Path) -> Result<SearchResult> {
        let s = self
            .config
            .search
            .clone()
            .ok_or_else(|| Error::Config("config has no search section".into()).in_stage("config"))?;
        let (table, _) = self.labeled_table()?;
        let ranking = self.rank(&self.impute_whole(&table)?)?;
        let features = ranking.select_top_k(s.top_k).map_err(|e| e.in_stage("search"))?;
        let result = random_search(&table, s.family, &s.space, &features, &self.config.cv_options(), s.metric)
            .map_err(|e| e.in_stage("search"))?;
        write_artifacts(out, &[("search.json".into(), to_json_bytes(&result)?)])?;
        Ok(result)
    }

    fn csv_bytes(&self, table: &DataTable) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_csv_writer(table, &mut buf, Some(self.config.label_column())).map_err(|e| e.in_stage("report"))?;
        Ok(buf)
    }
}

fn to_json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

/// Fold confusion matrices summed and re-indexed by class id.
pub fn pooled_confusion(report: &EvalReport, k: usize) -> ConfusionMatrix {
    let mut counts = vec![vec![0u64; k]; k];
    for f in &report.folds {
        for (i, row) in f.confusion.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                counts[report.classes[i]][report.classes[j]] += c;
            }
        }
    }
    ConfusionMatrix { counts }
}

/// Creates `out` and writes every artifact. On failure, files written by
/// this call are removed before the error is returned.
pub fn write_artifacts(out: &Path, files: &[(String, Vec<u8>)]) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e).in_stage("write"))?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = out.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            let _ = std::fs::remove_file(&path);
            return Err(Error::io(path, e).in_stage("write"));
        }
        written.push(path);
    }
    Ok(())
}
