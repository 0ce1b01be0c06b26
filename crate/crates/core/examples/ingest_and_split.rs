//! Write a synthetic CSV, read it back against its schema, deal stratified
//! folds and compare train/test feature distributions.

use outcome_ml::data::{distribution_report, parse_csv_with, split_stratified, CsvOptions, FeatureSchema};
use outcome_ml::synth::{self, SynthConfig};

fn main() -> outcome_ml::Result<()> {
    let dir = std::env::temp_dir().join("outcome-ml-ingest");
    std::fs::create_dir_all(&dir).map_err(|e| outcome_ml::Error::io(&dir, e))?;
    let data = synth::generate(&SynthConfig::default())?;
    data.write_csv(dir.join("data.csv"))?;

    let schema = FeatureSchema::from_json_str(&data.table.schema().to_json_string())?;
    let opts = CsvOptions {
        label_column: Some("last_status".into()),
        ignore_columns: vec!["icu_needed".into(), "ventilated_days".into()],
        label_map: None,
    };
    let table = parse_csv_with(dir.join("data.csv"), &schema, &opts)?;
    println!(
        "{} rows, {} features, {} absent cells, classes {:?}",
        table.n_rows(),
        table.n_cols(),
        table.missing_count(),
        table.class_counts()?
    );

    let plan = split_stratified(&table, 5, 42)?;
    println!("fold sizes {:?}", plan.fold_sizes());
    let train = table.select_rows(&plan.train_indices(0));
    let test = table.select_rows(&plan.test_indices(0));
    for d in distribution_report(&train, &test)?.iter().take(5) {
        println!("{:<8} KS {:.3}", d.feature, d.ks_statistic.unwrap_or(f64::NAN));
    }
    Ok(())
}
