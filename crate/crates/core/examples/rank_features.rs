//! Rank features by mean decrease in impurity with extra-trees and random
//! forest, then keep the top five.

use outcome_ml::importance::{impurity_importance, ImportanceMethod};
use outcome_ml::impute::{fill_boolean, knn_impute, ImputerConfig};
use outcome_ml::synth::{self, SynthConfig};

fn main() -> outcome_ml::Result<()> {
    let data = synth::generate(&SynthConfig::default())?;
    let table = knn_impute(&fill_boolean(&data.table), ImputerConfig::default())?;
    for method in [ImportanceMethod::ExtraTrees, ImportanceMethod::RandomForest] {
        let ranking = impurity_importance(&table, method, 100, 1)?;
        println!("{}", method.as_str());
        for e in ranking.entries.iter().take(6) {
            println!("  {:<8} {:.4}", e.feature, e.importance);
        }
        println!("  top 5: {:?}", ranking.select_top_k(5)?);
    }
    Ok(())
}
