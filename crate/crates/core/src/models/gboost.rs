//! Binary gradient boosting on logistic deviance.
//!
//! `F_0` is the log-odds of the base rate. Stage `m` fits a least-squares
//! regression tree to the residuals `y - p`, replaces each leaf value with
//! the Newton step `sum(r) / sum(p (1 - p))`, and adds `learning_rate` times
//! the tree to `F`.

use serde::{Deserialize, Serialize};

use super::{bad, sigmoid, ModelSpec};
use crate::error::Result;
use crate::matrix::Matrix;

#[derive(Debug, Clone)]
pub(crate) struct GBoostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl GBoostParams {
    pub(crate) fn from_spec(spec: &ModelSpec) -> Result<Self> {
        spec.choice("loss", &["deviance", "log_loss"])?;
        let learning_rate = spec.f64("learning_rate")?;
        if learning_rate < 0.0 {
            return Err(bad("learning_rate", format!("must be non-negative, got {learning_rate}")));
        }
        let min_samples_split = spec.positive_usize("min_samples_split")?;
        if min_samples_split < 2 {
            return Err(bad("min_samples_split", "must be at least 2".into()));
        }
        Ok(Self {
            n_estimators: spec.positive_usize("n_estimators")?,
            learning_rate,
            max_depth: spec.usize("max_depth")?,
            min_samples_split,
            min_samples_leaf: spec.positive_usize("min_samples_leaf")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Shallow least-squares tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegressionNode>,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                RegressionNode::Leaf { value } => return value,
                RegressionNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[RegressionNode], i: usize) -> usize {
            match nodes[i] {
                RegressionNode::Leaf { .. } => 0,
                RegressionNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GBoostModel {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

impl GBoostModel {
    /// Additive score after the first `stages` trees.
    pub fn raw_score_at(&self, row: &[f64], stages: usize) -> f64 {
        self.init
            + self.learning_rate
                * self.trees[..stages.min(self.trees.len())]
                    .iter()
                    .map(|t| t.predict(row))
                    .sum::<f64>()
    }

    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.raw_score_at(row, self.trees.len())
    }

    /// P(class index 1 | row).
    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.raw_score(row))
    }
}

/// Mean binomial deviance `-2/n * sum(y log p + (1-y) log(1-p))` for raw
/// scores `f`.
pub fn mean_deviance(f: &[f64], y: &[usize]) -> f64 {
    let s: f64 = f
        .iter()
        .zip(y)
        .map(|(&z, &c)| {
            // log(1 + exp(-s z)) with s = +/-1
            let t = if c == 1 { -z } else { z };
            if t > 0.0 {
                t + (-t).exp().ln_1p()
            } else {
                t.exp().ln_1p()
            }
        })
        .sum();
    2.0 * s / f.len() as f64
}

struct Grower<'a> {
    x: &'a Matrix,
    resid: &'a [f64],
    hess: &'a [f64],
    p: &'a GBoostParams,
    nodes: Vec<RegressionNode>,
}

impl Grower<'_> {
    fn grow(&mut self, samples: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(RegressionNode::Leaf { value: 0.0 });
        let split = if depth < self.p.max_depth && samples.len() >= self.p.min_samples_split {
            self.best_split(samples)
        } else {
            None
        };
        match split {
            Some((feature, threshold)) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    samples.iter().partition(|&&i| self.x.get(i, feature) <= threshold);
                let left = self.grow(&l, depth + 1);
                let right = self.grow(&r, depth + 1);
                self.nodes[id] = RegressionNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
            None => {
                let num: f64 = samples.iter().map(|&i| self.resid[i]).sum();
                let den: f64 = samples.iter().map(|&i| self.hess[i]).sum();
                let value = if den.abs() < 1e-150 { 0.0 } else { num / den };
                self.nodes[id] = RegressionNode::Leaf { value };
            }
        }
        id
    }

    /// Largest reduction in squared error; ties keep the first candidate in
    /// (feature, threshold) order. Zero-gain splits are allowed unless the
    /// node is already pure.
    fn best_split(&self, samples: &[usize]) -> Option<(usize, f64)> {
        let n = samples.len();
        let total: f64 = samples.iter().map(|&i| self.resid[i]).sum();
        let mean = total / n as f64;
        let sse: f64 = samples.iter().map(|&i| (self.resid[i] - mean).powi(2)).sum();
        if sse <= f64::EPSILON * n as f64 {
            return None;
        }
        let leaf = self.p.min_samples_leaf;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order = samples.to_vec();
        for f in 0..self.x.cols() {
            order.sort_by(|&a, &b| self.x.get(a, f).total_cmp(&self.x.get(b, f)).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            for pos in 1..n {
                left_sum += self.resid[order[pos - 1]];
                let (lo, hi) = (self.x.get(order[pos - 1], f), self.x.get(order[pos], f));
                if lo == hi || pos < leaf || n - pos < leaf {
                    continue;
                }
                let (nl, nr) = (pos as f64, (n - pos) as f64);
                let right_sum = total - left_sum;
                // maximizing this proxy minimizes the children's squared error
                let proxy = left_sum * left_sum / nl + right_sum * right_sum / nr;
                if best.is_none_or(|(b, _, _)| proxy > b + 1e-12 * b.abs().max(1.0)) {
                    best = Some((proxy, f, lo + (hi - lo) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Returns the model and the mean deviance before boosting and after each
/// stage.
pub(crate) fn fit(p: &GBoostParams, x: &Matrix, y: &[usize]) -> (GBoostModel, Vec<f64>) {
    let n = y.len();
    let pos = y.iter().filter(|&&c| c == 1).count() as f64;
    let init = (pos / (n as f64 - pos)).ln();
    let mut f = vec![init; n];
    let mut log = vec![mean_deviance(&f, y)];
    let mut trees = Vec::with_capacity(p.n_estimators);
    let samples: Vec<usize> = (0..n).collect();
    for _ in 0..p.n_estimators {
        let prob: Vec<f64> = f.iter().map(|&z| sigmoid(z)).collect();
        let resid: Vec<f64> = prob.iter().zip(y).map(|(q, &c)| c as f64 - q).collect();
        let hess: Vec<f64> = prob.iter().map(|q| q * (1.0 - q)).collect();
        let mut g = Grower {
            x,
            resid: &resid,
            hess: &hess,
            p,
            nodes: Vec::new(),
        };
        g.grow(&samples, 0);
        let tree = RegressionTree { nodes: g.nodes };
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += p.learning_rate * tree.predict(x.row(i));
        }
        log.push(mean_deviance(&f, y));
        trees.push(tree);
    }
    (
        GBoostModel {
            init,
            learning_rate: p.learning_rate,
            trees,
        },
        log,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lr: f64, n: usize) -> GBoostParams {
        GBoostParams {
            n_estimators: n,
            learning_rate: lr,
            max_depth: 2,
            min_samples_split: 5,
            min_samples_leaf: 4,
        }
    }

    fn xor(copies: usize) -> (Matrix, Vec<usize>) {
        let base = [([0.0, 0.0], 0), ([0.0, 1.0], 1), ([1.0, 0.0], 1), ([1.0, 1.0], 0)];
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..copies {
            for (r, c) in base {
                rows.push(r);
                y.push(c);
            }
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn xor_is_fit_in_one_stage() {
        let (x, y) = xor(4);
        let (m, _) = fit(&params(1.0, 2), &x, &y);
        for (i, &c) in y.iter().enumerate() {
            let p = m.raw_score_at(x.row(i), 1);
            assert_eq!(usize::from(p >= 0.0), c);
        }
        assert!(m.trees.iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn zero_learning_rate_is_constant() {
        let (x, _) = xor(2);
        let y = vec![1, 1, 1, 0, 0, 1, 1, 1];
        let (m, _) = fit(&params(0.0, 5), &x, &y);
        for r in x.iter_rows() {
            assert_eq!(m.raw_score(r), 3f64.ln());
        }
    }

    #[test]
    fn deviance_is_non_increasing_at_small_rate() {
        let x = Matrix::from_rows(&[[0.1], [0.4], [0.5], [0.9], [1.3], [1.4], [2.0], [2.2], [2.9], [3.1]]).unwrap();
        let y = [0, 0, 1, 0, 0, 1, 1, 0, 1, 1];
        let (m, log) = fit(&params(0.1, 30), &x, &y);
        for w in log.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{log:?}");
        }
        // independent recomputation of the final deviance
        let f: Vec<f64> = x.iter_rows().map(|r| m.raw_score(r)).collect();
        let dev: f64 = f
            .iter()
            .zip(&y)
            .map(|(z, &c)| {
                let p = 1.0 / (1.0 + (-z).exp());
                -2.0 * if c == 1 { p.ln() } else { (1.0 - p).ln() }
            })
            .sum::<f64>()
            / 10.0;
        assert!((dev - log[30]).abs() < 1e-12);
    }
}
