//! Linear discriminant analysis via an SVD of the within-class residuals.
//!
//! The residual matrix `sqrt(1/(n-k)) * (X - M_y) / std` is decomposed as
//! `U S V'`; directions with singular value at or below `tol` are dropped, so
//! collinear or constant columns reduce the rank instead of blowing up an
//! inverse. Discriminants are evaluated in the whitened space
//! `z = W' x` with `W = diag(1/std) V_r S_r^-1`:
//! `delta_k(x) = z . m_k - |m_k|^2 / 2 + log pi_k`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{bad, softmax_in_place, HyperValue, ModelSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone)]
pub(crate) struct LdaParams {
    pub tol: f64,
}

impl LdaParams {
    pub(crate) fn from_spec(spec: &ModelSpec) -> Result<Self> {
        spec.choice("solver", &["svd"])?;
        if *spec.get("n_components") != HyperValue::Null {
            spec.positive_usize("n_components")?;
        }
        let tol = spec.f64("tol")?;
        if tol < 0.0 {
            return Err(bad("tol", format!("must be non-negative, got {tol}")));
        }
        Ok(Self { tol })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub log_prior: Vec<f64>,
    /// `d x r` whitening map, row-major.
    pub scalings: Matrix,
    /// Whitened class means, `k x r`.
    pub projected_means: Matrix,
    pub rank: usize,
}

impl LdaModel {
    pub fn discriminants(&self, row: &[f64]) -> Vec<f64> {
        let r = self.rank;
        let mut z = vec![0.0; r];
        for (j, x) in row.iter().enumerate() {
            for (q, zq) in z.iter_mut().enumerate() {
                *zq += x * self.scalings.get(j, q);
            }
        }
        (0..self.log_prior.len())
            .map(|k| {
                let m = self.projected_means.row(k);
                let zm: f64 = z.iter().zip(m).map(|(a, b)| a * b).sum();
                let mm: f64 = m.iter().map(|v| v * v).sum();
                zm - 0.5 * mm + self.log_prior[k]
            })
            .collect()
    }

    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let mut s = self.discriminants(row);
        softmax_in_place(&mut s);
        s
    }
}

pub(crate) fn fit(p: &LdaParams, x: &Matrix, y: &[usize], n_classes: usize) -> Result<LdaModel> {
    let (n, d) = (x.rows(), x.cols());
    let mut counts = vec![0usize; n_classes];
    let mut means = vec![vec![0.0; d]; n_classes];
    for (i, &c) in y.iter().enumerate() {
        counts[c] += 1;
        for (m, v) in means[c].iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= c as f64);
    }

    let mut resid = vec![0.0; n * d];
    for i in 0..n {
        for j in 0..d {
            resid[i * d + j] = x.get(i, j) - means[y[i]][j];
        }
    }
    let std: Vec<f64> = (0..d)
        .map(|j| {
            let col = (0..n).map(|i| resid[i * d + j]);
            let mean = col.clone().sum::<f64>() / n as f64;
            let s = (col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    let fac = if n > n_classes {
        1.0 / (n - n_classes) as f64
    } else {
        1.0
    };
    let scale = fac.sqrt();
    for i in 0..n {
        for j in 0..d {
            resid[i * d + j] *= scale / std[j];
        }
    }

    let svd = DMatrix::from_row_slice(n, d, &resid).svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::InvalidArgument("singular value decomposition failed".into()))?;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&q| svd.singular_values[q] > p.tol)
        .collect();
    let r = keep.len();
    let mut scalings = Matrix::zeros(d, r);
    for j in 0..d {
        for (c, &q) in keep.iter().enumerate() {
            scalings.set(j, c, vt[(q, j)] / std[j] / svd.singular_values[q]);
        }
    }
    let mut projected = Matrix::zeros(n_classes, r);
    for (k, m) in means.iter().enumerate() {
        for q in 0..r {
            projected.set(k, q, (0..d).map(|j| m[j] * scalings.get(j, q)).sum());
        }
    }
    Ok(LdaModel {
        log_prior: counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect(),
        scalings,
        projected_means: projected,
        rank: r,
    })
}
