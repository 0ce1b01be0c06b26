//! Report JSON, ROC plots and confusion-matrix CSV.
//!
//! Renderers return bytes; writing is left to the caller so a run can stage
//! every artifact before touching the output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cv::EvalReport;
use crate::error::{Error, Result};
use crate::importance::ImportanceVector;
use crate::metrics::{ConfusionMatrix, RocPoint};
use crate::models::Family;

use super::config::ExperimentConfig;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub base: u64,
    pub split: u64,
    pub importance: u64,
    /// Spec seed per `"<model>_<k>"`.
    pub models: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: usize,
    pub features: usize,
    pub missing_cells: usize,
    /// (class id, count) for every present class.
    pub class_counts: Vec<(usize, usize)>,
    pub class_names: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub model: Family,
    pub top_k: usize,
    /// Metric name to `"NN.NN% (+/- N.NN%)"`.
    pub display: BTreeMap<String, String>,
    pub evaluation: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub seeds: SeedRecord,
    pub dataset: DatasetSummary,
    pub importance: Option<ImportanceVector>,
    pub results: Vec<ResultEntry>,
}

impl ResultEntry {
    pub fn new(model: Family, top_k: usize, evaluation: EvalReport) -> Self {
        let mut display = BTreeMap::new();
        display.insert("accuracy".to_string(), evaluation.accuracy.display());
        for (name, agg) in [
            ("sensitivity", evaluation.sensitivity),
            ("specificity", evaluation.specificity),
            ("auc", evaluation.auc),
        ] {
            if let Some(a) = agg {
                display.insert(name.to_string(), a.display());
            }
        }
        Self {
            model,
            top_k,
            display,
            evaluation,
        }
    }
}

pub fn report_json(report: &ExperimentReport) -> Result<Vec<u8>> {
    if report.results.is_empty() {
        return Err(Error::InvalidArgument("report has no results".into()));
    }
    let mut out = serde_json::to_vec_pretty(report)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_report_json(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report_json(report)?).map_err(|e| Error::io(path, e))
}

pub fn read_report_json(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let r: ExperimentReport = serde_json::from_str(&text)?;
    if r.schema_version != REPORT_SCHEMA_VERSION {
        return Err(Error::InvalidArgument(format!("report schema version {} not supported", r.schema_version)));
    }
    Ok(r)
}

/// One curve of an ROC plot.
#[derive(Debug, Clone, PartialEq)]
pub struct RocSeries {
    pub label: String,
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

const SIZE: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PLOT: f64 = SIZE - 2.0 * MARGIN;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn px(fpr: f64) -> f64 {
    MARGIN + fpr * PLOT
}

fn py(tpr: f64) -> f64 {
    MARGIN + (1.0 - tpr) * PLOT
}

/// SVG with the unit square as axes, one polyline per series and a legend in
/// series order. The last series is drawn heavier and its AUC is the title.
pub fn render_roc_svg(title: &str, series: &[RocSeries]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("no ROC series to plot".into()));
    }
    if let Some(s) = series.iter().find(|s| s.points.len() < 2) {
        return Err(Error::InvalidArgument(format!("series {:?} has fewer than 2 points", s.label)));
    }
    let main = series.last().expect("non-empty");
    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(w, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{} (AUC = {:.2})</text>"#, SIZE / 2.0, escape(title), main.auc);
    let _ = writeln!(
        w,
        r#"<rect class="axes" x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.2}</text>"#, px(v), MARGIN + PLOT + 16.0);
        let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#, MARGIN - 6.0, py(v) + 4.0);
    }
    let _ = writeln!(w, r#"<text x="{}" y="{}" text-anchor="middle">False positive rate</text>"#, SIZE / 2.0, SIZE - 14.0);
    let _ = writeln!(
        w,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">True positive rate</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    let _ = writeln!(
        w,
        r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#999999" stroke-dasharray="4 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for (i, s) in series.iter().enumerate() {
        let is_main = i + 1 == series.len();
        let color = if is_main { "black" } else { PALETTE[i % PALETTE.len()] };
        let width = if is_main { 2.5 } else { 1.2 };
        let pts: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", px(p.fpr), py(p.tpr))).collect();
        let _ = writeln!(
            w,
            r#"<polyline class="roc" data-label="{}" fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
            escape(&s.label),
            pts.join(" ")
        );
    }
    for (i, s) in series.iter().enumerate() {
        let is_main = i + 1 == series.len();
        let color = if is_main { "black" } else { PALETTE[i % PALETTE.len()] };
        let y = MARGIN + PLOT - 14.0 * (series.len() - i) as f64;
        let x = MARGIN + PLOT * 0.45;
        let _ = writeln!(
            w,
            r#"<g class="legend"><line x1="{x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{} (AUC = {:.2})</text></g>"#,
            y - 4.0,
            x + 18.0,
            y - 4.0,
            x + 24.0,
            y,
            escape(&s.label),
            s.auc
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Per-fold curves followed by the pooled curve.
pub fn roc_series(report: &EvalReport) -> Vec<RocSeries> {
    let mut out: Vec<RocSeries> = report
        .folds
        .iter()
        .filter_map(|f| {
            Some(RocSeries {
                label: format!("fold {}", f.fold + 1),
                points: f.roc.clone()?,
                auc: f.auc?,
            })
        })
        .collect();
    if let (Some(points), Some(auc)) = (&report.pooled_roc, report.pooled_auc) {
        out.push(RocSeries {
            label: "pooled".into(),
            points: points.clone(),
            auc,
        });
    }
    out
}

/// Header row `truth\pred,<labels>`, then one row per true class.
pub fn render_confusion_csv(matrix: &ConfusionMatrix, labels: &[String]) -> Result<String> {
    if labels.len() != matrix.k() || matrix.counts.iter().any(|r| r.len() != labels.len()) {
        return Err(Error::DimensionMismatch {
            expected: matrix.k(),
            got: labels.len(),
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["truth\\pred".to_string()];
    head.extend(labels.iter().cloned());
    w.write_record(&head)?;
    for (label, row) in labels.iter().zip(&matrix.counts) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn read_confusion_csv(text: &str) -> Result<(Vec<String>, ConfusionMatrix)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let labels: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut counts = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row: Vec<u64> = rec
            .iter()
            .skip(1)
            .map(|t| t.parse().map_err(|_| Error::InvalidArgument(format!("bad count {t:?}"))))
            .collect::<Result<_>>()?;
        if row.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: row.len(),
            });
        }
        counts.push(row);
    }
    if counts.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: counts.len(),
        });
    }
    Ok((labels, ConfusionMatrix { counts }))
}
