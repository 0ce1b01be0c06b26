//! Five-fold stratified cross-validation of a random forest, with per-fold
//! imputation and undersampling of the training part, plus an ROC plot.

use outcome_ml::cv::{cross_validate, CvOptions, ImputeScope};
use outcome_ml::models::{Family, ModelSpec};
use outcome_ml::pipeline::{render_roc_svg, roc_series};
use outcome_ml::rebalance::ResampleMode;
use outcome_ml::synth::{self, SynthConfig};

fn main() -> outcome_ml::Result<()> {
    let data = synth::generate(&SynthConfig::default())?;
    let features: Vec<String> = data.table.schema().names().iter().map(|s| s.to_string()).collect();
    for mode in [ResampleMode::None, ResampleMode::Undersample] {
        let opts = CvOptions {
            seed: 5,
            resample: mode,
            impute: Some(ImputeScope::TrainOnly),
            ..Default::default()
        };
        let report = cross_validate(&data.table, &ModelSpec::defaults(Family::Rf, 5), &features, &opts)?;
        println!("{mode:?}");
        println!("  accuracy    {}", report.accuracy.display());
        println!("  sensitivity {}", report.sensitivity.unwrap().display());
        println!("  specificity {}", report.specificity.unwrap().display());
        println!("  pooled AUC  {:.4}", report.pooled_auc.unwrap());
        if mode == ResampleMode::None {
            let svg = render_roc_svg("rf", &roc_series(&report))?;
            let path = std::env::temp_dir().join("outcome-ml-roc.svg");
            std::fs::write(&path, svg).map_err(|e| outcome_ml::Error::io(&path, e))?;
            println!("  ROC plot    {}", path.display());
        }
    }
    Ok(())
}
