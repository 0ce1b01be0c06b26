//! Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use super::{softmax_in_place, ModelSpec};
use crate::error::Result;
use crate::matrix::Matrix;

/// Floor used when every feature is constant.
const ABSOLUTE_VAR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct GnbParams {
    pub var_smoothing: f64,
}

impl GnbParams {
    pub(crate) fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Ok(Self {
            var_smoothing: spec.positive_f64("var_smoothing")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    pub log_prior: Vec<f64>,
    /// `means[k][j]`
    pub means: Vec<Vec<f64>>,
    /// Floored per-class variances.
    pub variances: Vec<Vec<f64>>,
    pub var_floor: f64,
}

impl GnbModel {
    pub fn log_joint(&self, row: &[f64]) -> Vec<f64> {
        (0..self.log_prior.len())
            .map(|k| {
                self.log_prior[k]
                    + row
                        .iter()
                        .zip(&self.means[k])
                        .zip(&self.variances[k])
                        .map(|((x, m), v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / v))
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let mut s = self.log_joint(row);
        softmax_in_place(&mut s);
        s
    }
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Variances are population variances floored at
/// `var_smoothing * max_j Var(x_j)`.
pub(crate) fn fit(p: &GnbParams, x: &Matrix, y: &[usize], n_classes: usize) -> GnbModel {
    let d = x.cols();
    let max_var = (0..d)
        .map(|j| mean_var(&x.column(j)).1)
        .fold(0.0f64, f64::max);
    let mut floor = p.var_smoothing * max_var;
    if floor <= 0.0 {
        floor = ABSOLUTE_VAR_FLOOR;
    }
    let n = y.len() as f64;
    let mut log_prior = Vec::with_capacity(n_classes);
    let mut means = Vec::with_capacity(n_classes);
    let mut variances = Vec::with_capacity(n_classes);
    for k in 0..n_classes {
        let members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == k).collect();
        log_prior.push((members.len() as f64 / n).ln());
        let (m, v): (Vec<f64>, Vec<f64>) = (0..d)
            .map(|j| {
                let col: Vec<f64> = members.iter().map(|&i| x.get(i, j)).collect();
                let (m, v) = mean_var(&col);
                (m, v.max(floor))
            })
            .unzip();
        means.push(m);
        variances.push(v);
    }
    GnbModel {
        log_prior,
        means,
        variances,
        var_floor: floor,
    }
}
