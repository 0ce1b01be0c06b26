//! Binary rates, confusion matrices, ROC curves and AUC.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rate kept as an exact fraction so identities between rates can be
/// checked without rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub num: u64,
    pub den: u64,
}

impl Rate {
    pub fn new(num: u64, den: u64, what: &'static str) -> Result<Self> {
        if den == 0 {
            return Err(Error::EmptyDenominator(what));
        }
        Ok(Self { num, den })
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Tallies predictions against truth with `positive` as the positive class.
    pub fn tally(pred: &[usize], truth: &[usize], positive: usize) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                got: pred.len(),
            });
        }
        let mut c = Self::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (t == positive, p == positive) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }

    pub fn total(&self) -> u64 {
        self.positives() + self.negatives()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: Rate,
    pub sensitivity: Rate,
    pub specificity: Rate,
}

/// Accuracy `(tp+tn)/total`, sensitivity `tp/(tp+fn)`, specificity
/// `tn/(tn+fp)`. A rate with an empty denominator is an error.
pub fn binary_metrics(c: &ConfusionCounts) -> Result<BinaryMetrics> {
    Ok(BinaryMetrics {
        accuracy: Rate::new(c.tp + c.tn, c.total(), "accuracy")?,
        sensitivity: Rate::new(c.tp, c.positives(), "sensitivity")?,
        specificity: Rate::new(c.tn, c.negatives(), "specificity")?,
    })
}

/// `counts[i][j]` = rows with truth `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> Result<Rate> {
        Rate::new(self.trace(), self.total(), "accuracy")
    }
}

pub fn confusion_matrix(pred: &[usize], truth: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let mut counts = vec![vec![0u64; k]; k];
    for (&p, &t) in pred.iter().zip(truth) {
        for label in [p, t] {
            if label >= k {
                return Err(Error::LabelOutOfRange { label, classes: k });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Score threshold reaching this point; `None` for the origin.
    pub threshold: Option<f64>,
}

/// Operating points for thresholds at each distinct score, descending,
/// starting at (0,0). Rows with equal scores enter together, so ties make a
/// diagonal step. The last point is (1,1).
pub fn roc_curve(scores: &[f64], truth: &[bool]) -> Result<Vec<RocPoint>> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("score {} at row {i} is not finite", scores[i])));
    }
    let p = truth.iter().filter(|&&t| t).count();
    let n = truth.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: None,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n as f64,
            tpr: tp as f64 / p as f64,
            threshold: Some(s),
        });
    }
    Ok(points)
}

/// Trapezoidal area under an ROC polyline.
pub fn auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// ROC curve and its area in one call.
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<(Vec<RocPoint>, f64)> {
    let pts = roc_curve(scores, truth)?;
    let a = auc(&pts);
    Ok((pts, a))
}

/// Mean and sample (n - 1) standard deviation of per-fold values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }

    /// `"91.40% (+/- 0.80%)"`
    pub fn display(&self) -> String {
        format!("{:.2}% (+/- {:.2}%)", self.mean * 100.0, self.std * 100.0)
    }
}
