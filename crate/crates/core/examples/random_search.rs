//! Randomized hyperparameter search for a KNN classifier.

use std::collections::BTreeMap;

use outcome_ml::cv::{CvOptions, ImputeScope};
use outcome_ml::models::{Family, HyperValue};
use outcome_ml::synth::{self, SynthConfig};
use outcome_ml::tuning::{random_search, Distribution, SearchMetric, SearchSpace};

fn main() -> outcome_ml::Result<()> {
    let data = synth::generate(&SynthConfig {
        rows: 400,
        ..Default::default()
    })?;
    let features: Vec<String> = ["cont_0", "cont_1", "cont_2", "flag_0"].map(String::from).to_vec();
    let space = SearchSpace {
        params: BTreeMap::from([
            ("n_neighbors".to_string(), Distribution::IntRange { low: 1, high: 25 }),
            (
                "weights".to_string(),
                Distribution::Choice {
                    values: vec![HyperValue::Text("uniform".into()), HyperValue::Text("distance".into())],
                },
            ),
        ]),
        draw_count: 20,
        seed: 2,
    };
    let cv = CvOptions {
        impute: Some(ImputeScope::TrainOnly),
        ..Default::default()
    };
    let result = random_search(&data.table, Family::Knn, &space, &features, &cv, SearchMetric::Auc)?;
    for t in &result.trials {
        println!("trial {:>2} AUC {:.4} {:?}", t.index, t.score, t.hyperparameters);
    }
    println!("best trial {} ({:.4})", result.best_index, result.best_score);
    Ok(())
}
