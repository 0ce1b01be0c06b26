//! Fully connected ReLU network with a softmax output, trained by
//! mini-batch Adam on mean cross-entropy.
//!
//! Parameters live in one flat vector so gradients can be checked entry by
//! entry against finite differences. Layer `l` stores its weights
//! `W_l` (`out x in`, row-major) followed by its bias.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{bad, softmax_in_place, HyperValue, ModelSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_from_seed};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Optimizer settings shared by the dense and recurrent networks.
#[derive(Debug, Clone)]
pub(crate) struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub min_rel_improvement: f64,
}

impl TrainConfig {
    pub(crate) fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let min_rel_improvement = spec.f64("min_rel_improvement")?;
        if min_rel_improvement < 0.0 {
            return Err(bad("min_rel_improvement", "must be non-negative".into()));
        }
        Ok(Self {
            learning_rate: spec.positive_f64("learning_rate")?,
            batch_size: spec.positive_usize("batch_size")?,
            epochs: spec.positive_usize("epochs")?,
            patience: spec.positive_usize("patience")?,
            min_rel_improvement,
        })
    }
}

/// Runs Adam over shuffled mini-batches. `grad` returns the mean loss and
/// gradient on the given rows. Returns the per-epoch training loss.
///
/// Training stops early once the epoch loss has not improved on the best so
/// far by a relative `min_rel_improvement` for `patience` epochs.
pub(crate) fn adam_train(
    theta: &mut [f64],
    n_rows: usize,
    cfg: &TrainConfig,
    seed: u64,
    mut grad: impl FnMut(&[f64], &[usize]) -> (f64, Vec<f64>),
) -> Result<Vec<f64>> {
    let mut rng = rng_from_seed(derive_seed(seed, "minibatch", 0));
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..n_rows).collect();
    let mut log = Vec::new();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, g) = grad(theta, batch);
            total += loss * batch.len() as f64;
            step += 1;
            let c1 = 1.0 - BETA1.powi(step);
            let c2 = 1.0 - BETA2.powi(step);
            for i in 0..theta.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                theta[i] -= cfg.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
            }
        }
        let loss = total / n_rows as f64;
        if !loss.is_finite() || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Diverged { epoch, loss });
        }
        log.push(loss);
        if loss < best * (1.0 - cfg.min_rel_improvement) {
            best = loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok(log)
}

/// Cross-entropy of `softmax(logits)` against `label`, and its gradient
/// with respect to the logits.
pub(crate) fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let mut p = logits.to_vec();
    softmax_in_place(&mut p);
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    let loss = lse - logits[label];
    p[label] -= 1.0;
    (loss, p)
}

#[derive(Debug, Clone)]
pub(crate) struct MlpParams {
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl MlpParams {
    pub(crate) fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let hidden = match spec.get("hidden_layers") {
            HyperValue::IntList(v) if v.iter().all(|&h| h > 0) => v.iter().map(|&h| h as usize).collect(),
            v => return Err(bad("hidden_layers", format!("expected a list of positive widths, got {v}"))),
        };
        Ok(Self {
            hidden,
            train: TrainConfig::from_spec(spec)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer widths from input to output.
    pub sizes: Vec<usize>,
    pub theta: Vec<f64>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "need input and output widths");
        let mut rng = rng_from_seed(derive_seed(seed, "mlp-init", 0));
        let mut theta = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            theta.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-a..a)));
            theta.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self {
            sizes: sizes.to_vec(),
            theta,
        }
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    /// (weight offset, bias offset) of each layer.
    fn offsets(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let wo = off;
                off += w[0] * w[1];
                let bo = off;
                off += w[1];
                (wo, bo)
            })
            .collect()
    }

    /// Pre-activations of every layer for one input.
    fn forward(&self, theta: &[f64], row: &[f64]) -> Vec<Vec<f64>> {
        let offs = self.offsets();
        let last = offs.len() - 1;
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(offs.len());
        let mut a = row.to_vec();
        for (l, &(wo, bo)) in offs.iter().enumerate() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let w = &theta[wo + o * n_in..wo + (o + 1) * n_in];
                    w.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>() + theta[bo + o]
                })
                .collect();
            if l < last {
                a = z.iter().map(|v| v.max(0.0)).collect();
            }
            zs.push(z);
        }
        zs
    }

    pub fn logits(&self, row: &[f64]) -> Vec<f64> {
        self.forward(&self.theta, row).pop().expect("output layer")
    }

    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let mut z = self.logits(row);
        softmax_in_place(&mut z);
        z
    }

    fn batch_gradient(&self, theta: &[f64], x: &Matrix, y: &[usize], idx: &[usize]) -> (f64, Vec<f64>) {
        let offs = self.offsets();
        let mut grad = vec![0.0; theta.len()];
        let mut loss = 0.0;
        for &i in idx {
            let row = x.row(i);
            let zs = self.forward(theta, row);
            let (l_i, mut delta) = cross_entropy(zs.last().expect("output"), y[i]);
            loss += l_i;
            for l in (0..offs.len()).rev() {
                let (wo, bo) = offs[l];
                let n_in = self.sizes[l];
                let input: Vec<f64> = if l == 0 {
                    row.to_vec()
                } else {
                    zs[l - 1].iter().map(|v| v.max(0.0)).collect()
                };
                for (o, d) in delta.iter().enumerate() {
                    grad[bo + o] += d;
                    for (g, a) in grad[wo + o * n_in..wo + (o + 1) * n_in].iter_mut().zip(&input) {
                        *g += d * a;
                    }
                }
                if l > 0 {
                    delta = (0..n_in)
                        .map(|j| {
                            if zs[l - 1][j] > 0.0 {
                                delta
                                    .iter()
                                    .enumerate()
                                    .map(|(o, d)| d * theta[wo + o * n_in + j])
                                    .sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        let n = idx.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }

    /// Mean cross-entropy over all rows.
    pub fn loss(&self, x: &Matrix, y: &[usize]) -> f64 {
        let idx: Vec<usize> = (0..x.rows()).collect();
        idx.iter()
            .map(|&i| cross_entropy(&self.logits(x.row(i)), y[i]).0)
            .sum::<f64>()
            / idx.len() as f64
    }

    /// Mean cross-entropy and its gradient with respect to `theta`.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[usize]) -> (f64, Vec<f64>) {
        let idx: Vec<usize> = (0..x.rows()).collect();
        self.batch_gradient(&self.theta, x, y, &idx)
    }
}

pub(crate) fn train(p: &MlpParams, x: &Matrix, y: &[usize], n_classes: usize, seed: u64) -> Result<(Mlp, Vec<f64>)> {
    let mut sizes = vec![x.cols()];
    sizes.extend(&p.hidden);
    sizes.push(n_classes);
    let mut net = Mlp::new(&sizes, seed);
    let mut theta = std::mem::take(&mut net.theta);
    let shape = net.clone();
    let log = adam_train(&mut theta, x.rows(), &p.train, seed, |t, idx| {
        shape.batch_gradient(t, x, y, idx)
    })?;
    net.theta = theta;
    Ok((net, log))
}
