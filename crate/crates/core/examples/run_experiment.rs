//! The config-driven pipeline end to end: synthesize a dataset, write a
//! config, run ranking plus cross-validation, and list the artifacts.

use outcome_ml::pipeline::{Experiment, ExperimentConfig};
use outcome_ml::synth::{self, SynthConfig};

fn main() -> outcome_ml::Result<()> {
    let dir = std::env::temp_dir().join("outcome-ml-experiment");
    std::fs::create_dir_all(&dir).map_err(|e| outcome_ml::Error::io(&dir, e))?;
    let data = synth::generate(&SynthConfig::default())?;
    data.write_csv(dir.join("data.csv"))?;
    std::fs::write(dir.join("schema.json"), data.table.schema().to_json_string())
        .map_err(|e| outcome_ml::Error::io(&dir, e))?;

    let config = ExperimentConfig::from_json_str(
        r#"{
            "dataset": "data.csv",
            "schema": "schema.json",
            "outcome": "ventilated_days",
            "bin_count": 3,
            "models": ["dnn", "rf"],
            "hyperparameters": {"dnn": {"epochs": 60}},
            "top_k": [5, 10],
            "seed": 4
        }"#,
    )?;
    let exp = Experiment::new(config, &dir);
    let out = dir.join("results");
    let report = exp.run(&out)?;
    for r in &report.results {
        println!("{:<4} top {:>2}: accuracy {}", r.model.as_str(), r.top_k, r.evaluation.accuracy.display());
    }
    let mut files: Vec<String> = std::fs::read_dir(&out)
        .map_err(|e| outcome_ml::Error::io(&out, e))?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    files.sort();
    println!("artifacts in {}: {files:?}", out.display());
    Ok(())
}
