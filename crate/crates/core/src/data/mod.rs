//! Typed tables: schema binding, CSV ingest, stratified fold assignment and
//! train/test distribution checks.

mod distribution;
mod split;
mod table;

pub use distribution::{distribution_report, ks_statistic, FeatureDivergence};
pub use split::{split_stratified, stratified_assignment, SplitPlan};
pub use table::{
    parse_csv, parse_csv_reader, parse_csv_with, schema_summary, write_csv, write_csv_writer, Column,
    ColumnKind, CsvOptions, DataTable, FeatureSchema, RowId, SchemaSummary, MISSING_TOKENS,
};
pub(crate) use table::class_counts;
