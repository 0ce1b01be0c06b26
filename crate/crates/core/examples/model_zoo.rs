//! Fit every model family with its default hyperparameters on one train
//! split and score the held-out rows.

use outcome_ml::data::split_stratified;
use outcome_ml::impute::{fill_boolean, knn_impute, ImputerConfig};
use outcome_ml::metrics::confusion_matrix;
use outcome_ml::models::{fit_named, Family, HyperValue, ModelSpec};
use outcome_ml::synth::{self, SynthConfig};

fn main() -> outcome_ml::Result<()> {
    let data = synth::generate(&SynthConfig {
        rows: 600,
        ..Default::default()
    })?;
    let table = knn_impute(&fill_boolean(&data.table), ImputerConfig::default())?;
    let plan = split_stratified(&table, 5, 3)?;
    let train = table.select_rows(&plan.train_indices(0));
    let test = table.select_rows(&plan.test_indices(0));
    let names: Vec<String> = table.schema().names().iter().map(|s| s.to_string()).collect();
    let (xtr, xte) = (train.to_matrix()?, test.to_matrix()?);
    let (ytr, yte) = (train.require_labels()?, test.require_labels()?);

    for family in Family::ALL {
        let mut spec = ModelSpec::defaults(family, 11);
        if matches!(family, Family::Dnn | Family::Lstm) {
            spec = spec.with("epochs", HyperValue::Int(20))?;
        }
        let model = fit_named(&spec, &xtr, ytr, names.clone())?;
        let pred = model.predict_labels(&xte, None)?;
        let acc = confusion_matrix(&pred, yte, 2)?.accuracy()?;
        println!("{:<9} held-out accuracy {:.3}", family.as_str(), acc.value());
    }
    Ok(())
}
