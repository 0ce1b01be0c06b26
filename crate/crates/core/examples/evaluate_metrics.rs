//! Exact rates from a confusion table, a multiclass confusion matrix, and a
//! ROC curve with its trapezoidal area.

use outcome_ml::metrics::{binary_metrics, confusion_matrix, roc_auc, Aggregate, ConfusionCounts};

fn main() -> outcome_ml::Result<()> {
    let pred = [1, 1, 0, 1, 0, 0, 1, 0];
    let truth = [1, 0, 0, 1, 0, 1, 1, 0];
    let counts = ConfusionCounts::tally(&pred, &truth, 1)?;
    let m = binary_metrics(&counts)?;
    println!("{counts:?}");
    println!(
        "accuracy {}/{}  sensitivity {}/{}  specificity {}/{}",
        m.accuracy.num, m.accuracy.den, m.sensitivity.num, m.sensitivity.den, m.specificity.num, m.specificity.den
    );

    let cm = confusion_matrix(&[0, 2, 1, 2, 0], &[0, 1, 1, 2, 2], 3)?;
    println!("multiclass counts {:?}, accuracy {:.2}", cm.counts, cm.accuracy()?.value());

    let scores = [0.9, 0.8, 0.7, 0.6, 0.55, 0.4, 0.3, 0.1];
    let labels: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
    let (points, auc) = roc_auc(&scores, &labels)?;
    for p in &points {
        println!("fpr {:.2} tpr {:.2}", p.fpr, p.tpr);
    }
    println!("AUC {auc:.4}");
    println!("{}", Aggregate::of(&[0.914, 0.905, 0.921, 0.910, 0.920]).display());
    Ok(())
}
