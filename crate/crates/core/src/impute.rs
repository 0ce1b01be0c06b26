//! Missing-cell handling: a constant 0.5 for boolean columns, then
//! k-nearest-neighbour imputation under the nan-euclidean metric for
//! everything else.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, DataTable};
use crate::error::{Error, Result};

/// Value written into absent boolean cells.
pub const BOOLEAN_FILL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ImputeMetric {
    #[default]
    NanEuclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImputerConfig {
    pub neighbor_count: usize,
    pub weighting: Weighting,
    pub metric: ImputeMetric,
}

impl Default for ImputerConfig {
    fn default() -> Self {
        Self {
            neighbor_count: 5,
            weighting: Weighting::Uniform,
            metric: ImputeMetric::NanEuclidean,
        }
    }
}

impl ImputerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neighbor_count == 0 {
            return Err(Error::InvalidArgument("neighbor_count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Replaces every absent cell of a boolean column with 0.5.
pub fn fill_boolean(table: &DataTable) -> DataTable {
    let mut out = table.clone();
    let d = out.n_cols();
    if d == 0 {
        return out;
    }
    let bool_cols: Vec<bool> = (0..d).map(|j| table.schema().kind(j) == ColumnKind::Boolean).collect();
    for (k, cell) in out.cells_mut().iter_mut().enumerate() {
        if cell.is_none() && bool_cols[k % d] {
            *cell = Some(BOOLEAN_FILL);
        }
    }
    out
}

/// Euclidean distance over the coordinates present in both rows, scaled up
/// by `total / present` so rows with gaps stay comparable.
pub fn nan_euclidean_distance(a: &[Option<f64>], b: &[Option<f64>]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut present = 0usize;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            present += 1;
            sum += (x - y) * (x - y);
        }
    }
    if present == 0 {
        return Err(Error::NoSharedCoordinates);
    }
    Ok((a.len() as f64 / present as f64 * sum).sqrt())
}

/// KNN imputer fitted on a donor table.
///
/// Donors for column `c` are the fitted rows where `c` is present and the
/// distance to the target row is defined. The `k` nearest donors (ties go to
/// the lower row id) are averaged without weights. With no eligible donor the
/// column mean of the fitted table is used, and a column that is absent
/// everywhere is filled with 0. Distances always use the un-imputed values,
/// so the result does not depend on visiting order.
#[derive(Debug, Clone)]
pub struct KnnImputer {
    config: ImputerConfig,
    donors: DataTable,
    column_means: Vec<f64>,
}

impl KnnImputer {
    pub fn fit(donors: &DataTable, config: ImputerConfig) -> Result<Self> {
        config.validate()?;
        let column_means = (0..donors.n_cols())
            .map(|j| {
                let v = donors.present_values(j);
                if v.is_empty() {
                    0.0
                } else {
                    v.iter().sum::<f64>() / v.len() as f64
                }
            })
            .collect();
        Ok(Self {
            config,
            donors: donors.clone(),
            column_means,
        })
    }

    pub fn transform(&self, table: &DataTable) -> Result<DataTable> {
        if table.schema() != self.donors.schema() {
            return Err(Error::Schema("imputer fitted on a different schema".into()));
        }
        let d = table.n_cols();
        let filled: Vec<Vec<(usize, f64)>> = (0..table.n_rows())
            .into_par_iter()
            .map(|i| self.impute_row(table.row(i)))
            .collect();
        let mut out = table.clone();
        let cells = out.cells_mut();
        for (i, row) in filled.into_iter().enumerate() {
            for (j, v) in row {
                cells[i * d + j] = Some(v);
            }
        }
        Ok(out)
    }

    fn impute_row(&self, row: &[Option<f64>]) -> Vec<(usize, f64)> {
        let missing: Vec<usize> = (0..row.len()).filter(|&j| row[j].is_none()).collect();
        if missing.is_empty() {
            return Vec::new();
        }
        // (distance, row id, donor index) for every donor with a defined distance
        let mut ranked: Vec<(f64, crate::data::RowId, usize)> = (0..self.donors.n_rows())
            .filter_map(|r| {
                nan_euclidean_distance(row, self.donors.row(r))
                    .ok()
                    .map(|dist| (dist, self.donors.row_ids()[r], r))
            })
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let k = self.config.neighbor_count;
        missing
            .into_iter()
            .map(|j| {
                let vals: Vec<f64> = ranked
                    .iter()
                    .filter_map(|&(_, _, r)| self.donors.cell(r, j))
                    .take(k)
                    .collect();
                let v = if vals.is_empty() {
                    self.column_means[j]
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                };
                (j, v)
            })
            .collect()
    }
}

/// Imputes `table` using itself as the donor pool.
pub fn knn_impute(table: &DataTable, config: ImputerConfig) -> Result<DataTable> {
    KnnImputer::fit(table, config)?.transform(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSchema;

    fn table(kinds: &[ColumnKind], rows: Vec<Vec<Option<f64>>>) -> DataTable {
        let s = FeatureSchema::from_pairs(kinds.iter().enumerate().map(|(i, &k)| (format!("c{i}"), k))).unwrap();
        DataTable::new(s, rows, None).unwrap()
    }

    #[test]
    fn boolean_fill_only_touches_booleans() {
        let t = table(
            &[ColumnKind::Boolean, ColumnKind::Continuous],
            vec![vec![Some(1.0), None], vec![None, Some(3.2)], vec![Some(0.0), None]],
        );
        let f = fill_boolean(&t);
        assert_eq!(f.row(0), &[Some(1.0), None]);
        assert_eq!(f.row(1), &[Some(0.5), Some(3.2)]);
        assert_eq!(f.row(2), &[Some(0.0), None]);
        let dense = fill_boolean(&f);
        assert_eq!(dense, f);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(nan_euclidean_distance(&[Some(1.0), Some(2.0)], &[Some(1.0), Some(2.0)]).unwrap(), 0.0);
        let d = nan_euclidean_distance(&[Some(1.0), None], &[Some(2.0), Some(3.0)]).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            nan_euclidean_distance(&[None, None], &[Some(1.0), Some(1.0)]),
            Err(Error::NoSharedCoordinates)
        ));
    }

    #[test]
    fn nearest_donor_with_value_wins() {
        let t = table(
            &[ColumnKind::Continuous, ColumnKind::Continuous],
            vec![
                vec![Some(1.0), Some(10.0)],
                vec![Some(1.0), None],
                vec![Some(9.0), Some(50.0)],
            ],
        );
        let cfg = ImputerConfig {
            neighbor_count: 1,
            ..Default::default()
        };
        let out = knn_impute(&t, cfg).unwrap();
        assert_eq!(out.cell(1, 1), Some(10.0));
        // k larger than the donor pool averages everything available
        let out = knn_impute(&t, ImputerConfig::default()).unwrap();
        assert_eq!(out.cell(1, 1), Some(30.0));
    }

    #[test]
    fn single_donor_column() {
        for k in 1..6 {
            let t = table(
                &[ColumnKind::Continuous, ColumnKind::Categorical],
                vec![
                    vec![Some(1.0), None],
                    vec![Some(2.0), Some(7.0)],
                    vec![Some(5.0), None],
                    vec![None, None],
                ],
            );
            let out = knn_impute(
                &t,
                ImputerConfig {
                    neighbor_count: k,
                    ..Default::default()
                },
            )
            .unwrap();
            for i in 0..4 {
                assert_eq!(out.cell(i, 1), Some(7.0));
            }
            // row 3 has no shared coordinate with any donor of column 0 -> column mean
            assert_eq!(out.cell(3, 0), Some((1.0 + 2.0 + 5.0) / 3.0));
        }
    }

    #[test]
    fn all_absent_column_fills_zero() {
        let t = table(
            &[ColumnKind::Continuous, ColumnKind::Continuous],
            vec![vec![Some(1.0), None], vec![Some(2.0), None]],
        );
        let out = knn_impute(&t, ImputerConfig::default()).unwrap();
        assert_eq!(out.cell(0, 1), Some(0.0));
        assert_eq!(out.missing_count(), 0);
    }

    #[test]
    fn ties_break_on_lower_row_id() {
        let t = table(
            &[ColumnKind::Continuous, ColumnKind::Continuous],
            vec![
                vec![Some(0.0), None],
                vec![Some(1.0), Some(100.0)],
                vec![Some(-1.0), Some(200.0)],
            ],
        );
        let out = knn_impute(
            &t,
            ImputerConfig {
                neighbor_count: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.cell(0, 1), Some(100.0));
    }

    #[test]
    fn zero_neighbors_rejected() {
        let t = table(&[ColumnKind::Continuous], vec![vec![Some(1.0)]]);
        assert!(knn_impute(
            &t,
            ImputerConfig {
                neighbor_count: 0,
                ..Default::default()
            }
        )
        .is_err());
    }
}
