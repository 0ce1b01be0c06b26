use serde::{Deserialize, Serialize};

use super::table::DataTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDivergence {
    pub feature: String,
    /// Two-sample Kolmogorov-Smirnov statistic; `None` when either side has
    /// no present values.
    pub ks_statistic: Option<f64>,
    pub train_present: usize,
    pub test_present: usize,
}

/// Per-feature train/test divergence over non-missing values. Diagnostic
/// only; nothing in the pipeline gates on it.
pub fn distribution_report(train: &DataTable, test: &DataTable) -> Result<Vec<FeatureDivergence>> {
    if train.schema() != test.schema() {
        return Err(Error::Schema("train and test schemas differ".into()));
    }
    Ok(train
        .schema()
        .columns()
        .iter()
        .enumerate()
        .map(|(j, col)| {
            let a = train.present_values(j);
            let b = test.present_values(j);
            FeatureDivergence {
                feature: col.name.clone(),
                ks_statistic: ks_statistic(&a, &b),
                train_present: a.len(),
                test_present: b.len(),
            }
        })
        .collect())
}

/// sup |F_a(x) - F_b(x)| over the pooled sample points.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Some(d)
}
