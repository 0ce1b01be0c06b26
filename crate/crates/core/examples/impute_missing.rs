//! Boolean cells become 0.5, everything else is filled from the five
//! nearest rows under the nan-euclidean distance.

use outcome_ml::data::{ColumnKind, DataTable, FeatureSchema};
use outcome_ml::impute::{fill_boolean, knn_impute, nan_euclidean_distance, ImputerConfig};

fn main() -> outcome_ml::Result<()> {
    let schema = FeatureSchema::from_pairs([
        ("age", ColumnKind::Continuous),
        ("oxygen", ColumnKind::Continuous),
        ("fever", ColumnKind::Boolean),
    ])?;
    let rows = vec![
        vec![Some(61.0), Some(94.0), Some(1.0)],
        vec![Some(45.0), None, Some(0.0)],
        vec![None, Some(88.0), None],
        vec![Some(70.0), Some(90.0), Some(1.0)],
        vec![Some(52.0), Some(97.0), Some(0.0)],
    ];
    let table = DataTable::new(schema, rows, None)?;
    println!("d(row0, row2) = {:.3}", nan_euclidean_distance(table.row(0), table.row(2))?);

    let filled = knn_impute(&fill_boolean(&table), ImputerConfig { neighbor_count: 2, ..Default::default() })?;
    for i in 0..filled.n_rows() {
        println!("{:?}", filled.row(i));
    }
    Ok(())
}
