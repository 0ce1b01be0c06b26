//! Exact k-nearest-neighbour classifier with Minkowski distance.

use serde::{Deserialize, Serialize};

use super::{bad, ModelSpec};
use crate::error::Result;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeights {
    Uniform,
    Distance,
}

#[derive(Debug, Clone)]
pub(crate) struct KnnParams {
    pub n_neighbors: usize,
    pub weights: KnnWeights,
    pub p: f64,
}

impl KnnParams {
    pub(crate) fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let weights = match spec.choice("weights", &["uniform", "distance"])? {
            "uniform" => KnnWeights::Uniform,
            _ => KnnWeights::Distance,
        };
        spec.choice("algorithm", &["auto", "brute", "kd_tree", "ball_tree"])?;
        spec.positive_usize("leaf_size")?;
        spec.choice("metric", &["minkowski"])?;
        let p = spec.f64("p")?;
        if p < 1.0 {
            return Err(bad("p", format!("Minkowski exponent must be >= 1, got {p}")));
        }
        Ok(Self {
            n_neighbors: spec.positive_usize("n_neighbors")?,
            weights,
            p,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub train: Matrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub k: usize,
    pub weights: KnnWeights,
    pub p: f64,
}

impl KnnModel {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.p == 2.0 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        } else if self.p == 1.0 {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
        } else {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs().powf(self.p))
                .sum::<f64>()
                .powf(1.0 / self.p)
        }
    }

    /// Neighbours ordered by (distance, training index).
    pub fn neighbors(&self, row: &[f64]) -> Vec<(f64, usize)> {
        let mut d: Vec<(f64, usize)> = self
            .train
            .iter_rows()
            .enumerate()
            .map(|(i, r)| (self.distance(r, row), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.truncate(self.k);
        d
    }

    /// Normalized class votes. With distance weights, any neighbour at
    /// distance zero takes the whole vote (shared among exact matches).
    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let nb = self.neighbors(row);
        let mut votes = vec![0.0; self.n_classes];
        let exact = nb.iter().any(|(d, _)| *d == 0.0);
        for &(d, i) in &nb {
            let w = match self.weights {
                KnnWeights::Uniform => 1.0,
                KnnWeights::Distance if exact => f64::from(d == 0.0),
                KnnWeights::Distance => 1.0 / d,
            };
            votes[self.labels[i]] += w;
        }
        let s: f64 = votes.iter().sum();
        votes.iter_mut().for_each(|v| *v /= s);
        votes
    }
}

pub(crate) fn fit(p: &KnnParams, x: &Matrix, y: &[usize], n_classes: usize) -> KnnModel {
    let mut k = p.n_neighbors;
    if k > x.rows() {
        log::warn!("n_neighbors = {k} exceeds {} training rows; clamped", x.rows());
        k = x.rows();
    }
    KnnModel {
        train: x.clone(),
        labels: y.to_vec(),
        n_classes,
        k,
        weights: p.weights,
        p: p.p,
    }
}
