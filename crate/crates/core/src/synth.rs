//! Synthetic class-imbalanced tables with informative continuous and boolean
//! features, injected missingness, and three linked outcomes.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, DataTable, FeatureSchema};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub const OUTCOME_COLUMNS: [&str; 3] = ["last_status", "icu_needed", "ventilated_days"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub rows: usize,
    /// Share of rows in the minority (positive-outcome) class; the count is
    /// `round(rows * minority_fraction)` exactly.
    pub minority_fraction: f64,
    pub continuous: usize,
    pub boolean: usize,
    /// Leading continuous and boolean columns that depend on the outcome.
    pub informative: usize,
    /// Mean shift (in noise standard deviations) of informative continuous
    /// columns for minority rows.
    pub separation: f64,
    /// Probability that any feature cell is absent.
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            rows: 1384,
            minority_fraction: 260.0 / 1384.0,
            continuous: 8,
            boolean: 8,
            informative: 3,
            separation: 1.0,
            missing_rate: 0.05,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.rows < 2 {
            return bad("rows must be at least 2");
        }
        if !(self.minority_fraction > 0.0 && self.minority_fraction < 1.0) {
            return bad("minority_fraction must lie in (0, 1)");
        }
        if self.continuous + self.boolean == 0 {
            return bad("need at least one feature column");
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return bad("missing_rate must lie in [0, 1)");
        }
        if !self.separation.is_finite() {
            return bad("separation must be finite");
        }
        Ok(())
    }

    pub fn minority_count(&self) -> usize {
        ((self.rows as f64 * self.minority_fraction).round() as usize).clamp(1, self.rows - 1)
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    /// Features with `last_status` as labels (0 = majority, 1 = minority).
    pub table: DataTable,
    pub last_status: Vec<usize>,
    pub icu_needed: Vec<usize>,
    pub ventilated_days: Vec<u64>,
}

impl SynthData {
    /// The feature table relabeled with another outcome column.
    pub fn with_outcome(&self, outcome: &str) -> Result<DataTable> {
        let labels = match outcome {
            "last_status" => self.last_status.clone(),
            "icu_needed" => self.icu_needed.clone(),
            "ventilated_days" => self.ventilated_days.iter().map(|&d| d as usize).collect(),
            o => return Err(Error::InvalidArgument(format!("unknown outcome {o:?}"))),
        };
        self.table.clone().with_labels(labels)
    }

    /// Features followed by the three outcome columns.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_writer(std::io::BufWriter::new(file))
    }

    pub fn write_csv_writer<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut head: Vec<&str> = self.table.schema().names();
        head.extend(OUTCOME_COLUMNS);
        out.write_record(&head)?;
        for i in 0..self.table.n_rows() {
            let mut rec: Vec<String> = self
                .table
                .row(i)
                .iter()
                .map(|c| c.map_or_else(|| "NA".to_string(), |v| format!("{v}")))
                .collect();
            rec.push(self.last_status[i].to_string());
            rec.push(self.icu_needed[i].to_string());
            rec.push(self.ventilated_days[i].to_string());
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn schema(cfg: &SynthConfig) -> FeatureSchema {
    let cont = (0..cfg.continuous).map(|j| (format!("cont_{j}"), ColumnKind::Continuous));
    let boolean = (0..cfg.boolean).map(|j| (format!("flag_{j}"), ColumnKind::Boolean));
    FeatureSchema::from_pairs(cont.chain(boolean)).expect("generated names are unique")
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let n = cfg.rows;
    let mut label_rng = rng_from_seed(derive_seed(cfg.seed, "synth-labels", 0));
    let minority = cfg.minority_count();
    let mut last_status: Vec<usize> = (0..n).map(|i| usize::from(i < minority)).collect();
    last_status.shuffle(&mut label_rng);

    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = rng_from_seed(derive_seed(cfg.seed, "synth-features", 0));
    let mut rows = Vec::with_capacity(n);
    let mut icu_needed = Vec::with_capacity(n);
    let mut ventilated_days = Vec::with_capacity(n);
    for &y in &last_status {
        let severity = y as f64 * cfg.separation + 0.5 * noise.sample(&mut rng);
        let mut row = Vec::with_capacity(cfg.continuous + cfg.boolean);
        for j in 0..cfg.continuous {
            let shift = if j < cfg.informative { severity } else { 0.0 };
            row.push(Some(50.0 + 10.0 * (shift + noise.sample(&mut rng))));
        }
        for j in 0..cfg.boolean {
            let p = if j < cfg.informative {
                (0.2 + 0.25 * severity).clamp(0.02, 0.98)
            } else {
                0.3
            };
            row.push(Some(if rng.gen_bool(p) { 1.0 } else { 0.0 }));
        }
        for cell in row.iter_mut() {
            if rng.gen_bool(cfg.missing_rate) {
                *cell = None;
            }
        }
        rows.push(row);
        let p_icu = (0.15 + 0.35 * severity).clamp(0.02, 0.95);
        let icu = rng.gen_bool(p_icu);
        icu_needed.push(usize::from(icu));
        let days = if icu && rng.gen_bool((0.4 + 0.3 * severity).clamp(0.05, 0.95)) {
            let mean = (6.0 + 6.0 * severity).max(1.0);
            1 + Exp::new(1.0 / mean).expect("positive rate").sample(&mut rng).floor() as u64
        } else {
            0
        };
        ventilated_days.push(days);
    }
    let table = DataTable::new(schema(cfg), rows, Some(last_status.clone()))?;
    Ok(SynthData {
        table,
        last_status,
        icu_needed,
        ventilated_days,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_counts_are_exact() {
        let d = generate(&SynthConfig::default()).unwrap();
        assert_eq!(d.table.n_rows(), 1384);
        assert_eq!(d.table.class_counts().unwrap(), vec![1124, 260]);
        assert!(d.table.missing_count() > 0);
    }

    #[test]
    fn same_seed_same_table() {
        let cfg = SynthConfig {
            rows: 50,
            ..SynthConfig::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.ventilated_days, b.ventilated_days);
    }

    #[test]
    fn csv_carries_outcomes() {
        let cfg = SynthConfig {
            rows: 10,
            continuous: 1,
            boolean: 1,
            ..SynthConfig::default()
        };
        let d = generate(&cfg).unwrap();
        let mut buf = Vec::new();
        d.write_csv_writer(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("cont_0,flag_0,last_status,icu_needed,ventilated_days\n"));
        assert_eq!(text.lines().count(), 11);
    }
}
