//! Oversample the minority class to half the majority, undersample to equal
//! counts, and bin ventilation days into weeks.

use outcome_ml::rebalance::{bin_ventilation_days, oversample, undersample, BinSpec, ResampleMode, ResamplePlan};
use outcome_ml::synth::{self, SynthConfig};

fn main() -> outcome_ml::Result<()> {
    let data = synth::generate(&SynthConfig {
        rows: 500,
        minority_fraction: 0.1,
        ..Default::default()
    })?;
    let t = &data.table;
    println!("original     {:?}", t.class_counts()?);
    let plan = ResamplePlan {
        mode: ResampleMode::Oversample,
        seed: 7,
    };
    println!("oversampled  {:?}", oversample(t, &plan)?.class_counts()?);
    println!("undersampled {:?}", undersample(t, &plan)?.class_counts()?);

    for bins in 3..=7 {
        let spec = BinSpec::new(bins)?;
        let labels = spec.labels();
        let row: Vec<String> = [0, 5, 10, 20, 36]
            .iter()
            .map(|&d| format!("{d}d->{}", labels[bin_ventilation_days(d, spec).unwrap()]))
            .collect();
        println!("{bins} bins: {}", row.join("  "));
    }
    Ok(())
}
