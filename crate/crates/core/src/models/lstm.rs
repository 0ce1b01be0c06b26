//! Single-layer LSTM over the feature vector read as a sequence: feature `t`
//! is the scalar input at step `t`. The final hidden state feeds a dense
//! softmax layer.
//!
//! Flat parameter layout, gate blocks ordered input, forget, cell, output:
//! `w_x` (`4H`), `w_h` (`4H x H` row-major), `b` (`4H`), `v` (`K x H`),
//! `c` (`K`).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::{adam_train, cross_entropy, TrainConfig};
use super::{sigmoid, softmax_in_place, ModelSpec};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone)]
pub(crate) struct LstmParams {
    pub hidden: usize,
    pub forget_bias: f64,
    pub train: TrainConfig,
}

impl LstmParams {
    pub(crate) fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Ok(Self {
            hidden: spec.positive_usize("hidden_size")?,
            forget_bias: spec.f64("forget_bias")?,
            train: TrainConfig::from_spec(spec)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmNet {
    pub hidden: usize,
    pub n_classes: usize,
    pub theta: Vec<f64>,
}

struct Offsets {
    wx: usize,
    wh: usize,
    b: usize,
    v: usize,
    c: usize,
    end: usize,
}

struct Step {
    gates: [Vec<f64>; 4],
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmNet {
    /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights; `forget_bias` added to the
    /// forget-gate bias.
    pub fn new(hidden: usize, n_classes: usize, forget_bias: f64, seed: u64) -> Self {
        let mut net = Self {
            hidden,
            n_classes,
            theta: Vec::new(),
        };
        let o = net.offsets();
        let a = 1.0 / (hidden as f64).sqrt();
        let mut rng = rng_from_seed(derive_seed(seed, "lstm-init", 0));
        net.theta = (0..o.end).map(|_| rng.gen_range(-a..a)).collect();
        for j in 0..hidden {
            net.theta[o.b + hidden + j] += forget_bias;
        }
        net
    }

    fn offsets(&self) -> Offsets {
        let (h, k) = (self.hidden, self.n_classes);
        let wx = 0;
        let wh = wx + 4 * h;
        let b = wh + 4 * h * h;
        let v = b + 4 * h;
        let c = v + k * h;
        Offsets {
            wx,
            wh,
            b,
            v,
            c,
            end: c + k,
        }
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    /// Sets every gate bias of one kind (0 input, 1 forget, 2 cell, 3 output).
    pub fn set_gate_bias(&mut self, gate: usize, value: f64) {
        let o = self.offsets();
        for j in 0..self.hidden {
            self.theta[o.b + gate * self.hidden + j] = value;
        }
    }

    fn run(&self, theta: &[f64], seq: &[f64]) -> (Vec<Step>, Vec<Vec<f64>>, Vec<f64>) {
        let h = self.hidden;
        let o = self.offsets();
        let mut hs = vec![vec![0.0; h]];
        let mut c_prev = vec![0.0; h];
        let mut steps = Vec::with_capacity(seq.len());
        for &x in seq {
            let hp = hs.last().expect("initial state");
            let pre = |r: usize| {
                let w = &theta[o.wh + r * h..o.wh + (r + 1) * h];
                theta[o.wx + r] * x + w.iter().zip(hp).map(|(a, b)| a * b).sum::<f64>() + theta[o.b + r]
            };
            let gate = |g: usize, act: fn(f64) -> f64| (0..h).map(|j| act(pre(g * h + j))).collect::<Vec<f64>>();
            let gates = [gate(0, sigmoid), gate(1, sigmoid), gate(2, f64::tanh), gate(3, sigmoid)];
            let c: Vec<f64> = (0..h).map(|j| gates[1][j] * c_prev[j] + gates[0][j] * gates[2][j]).collect();
            let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            hs.push((0..h).map(|j| gates[3][j] * tanh_c[j]).collect());
            c_prev = c.clone();
            steps.push(Step { gates, c, tanh_c });
        }
        let last = hs.last().expect("state");
        let logits = (0..self.n_classes)
            .map(|k| {
                let v = &theta[o.v + k * h..o.v + (k + 1) * h];
                v.iter().zip(last).map(|(a, b)| a * b).sum::<f64>() + theta[o.c + k]
            })
            .collect();
        (steps, hs, logits)
    }

    pub fn logits(&self, row: &[f64]) -> Vec<f64> {
        self.run(&self.theta, row).2
    }

    pub fn predict_distribution(&self, row: &[f64]) -> Vec<f64> {
        let mut z = self.logits(row);
        softmax_in_place(&mut z);
        z
    }

    /// Backpropagation through time for one sequence, accumulated into `grad`.
    fn accumulate(&self, theta: &[f64], seq: &[f64], label: usize, grad: &mut [f64]) -> f64 {
        let h = self.hidden;
        let o = self.offsets();
        let (steps, hs, logits) = self.run(theta, seq);
        let (loss, dz) = cross_entropy(&logits, label);
        let last = &hs[seq.len()];
        let mut dh = vec![0.0; h];
        for (k, d) in dz.iter().enumerate() {
            grad[o.c + k] += d;
            for j in 0..h {
                grad[o.v + k * h + j] += d * last[j];
                dh[j] += d * theta[o.v + k * h + j];
            }
        }
        let mut dc_next = vec![0.0; h];
        let mut da = vec![0.0; 4 * h];
        for t in (0..seq.len()).rev() {
            let s = &steps[t];
            let [gi, gf, gg, go] = &s.gates;
            let c_prev: &[f64] = if t == 0 { &[] } else { &steps[t - 1].c };
            for j in 0..h {
                let cp = if t == 0 { 0.0 } else { c_prev[j] };
                let dc = dc_next[j] + dh[j] * go[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
                da[j] = dc * gg[j] * gi[j] * (1.0 - gi[j]);
                da[h + j] = dc * cp * gf[j] * (1.0 - gf[j]);
                da[2 * h + j] = dc * gi[j] * (1.0 - gg[j] * gg[j]);
                da[3 * h + j] = dh[j] * s.tanh_c[j] * go[j] * (1.0 - go[j]);
                dc_next[j] = dc * gf[j];
            }
            let hp = &hs[t];
            for (r, a) in da.iter().enumerate() {
                grad[o.wx + r] += a * seq[t];
                grad[o.b + r] += a;
                for j in 0..h {
                    grad[o.wh + r * h + j] += a * hp[j];
                }
            }
            for (j, dhj) in dh.iter_mut().enumerate() {
                *dhj = da.iter().enumerate().map(|(r, a)| a * theta[o.wh + r * h + j]).sum();
            }
        }
        loss
    }

    fn batch_gradient(&self, theta: &[f64], x: &Matrix, y: &[usize], idx: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; theta.len()];
        let loss: f64 = idx.iter().map(|&i| self.accumulate(theta, x.row(i), y[i], &mut grad)).sum();
        let n = idx.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }

    /// Mean cross-entropy over all rows.
    pub fn loss(&self, x: &Matrix, y: &[usize]) -> f64 {
        x.iter_rows()
            .zip(y)
            .map(|(r, &l)| cross_entropy(&self.logits(r), l).0)
            .sum::<f64>()
            / y.len() as f64
    }

    /// Mean cross-entropy and its gradient with respect to `theta`.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[usize]) -> (f64, Vec<f64>) {
        let idx: Vec<usize> = (0..x.rows()).collect();
        self.batch_gradient(&self.theta, x, y, &idx)
    }
}

pub(crate) fn train(
    p: &LstmParams,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<(LstmNet, Vec<f64>)> {
    let mut net = LstmNet::new(p.hidden, n_classes, p.forget_bias, seed);
    let mut theta = std::mem::take(&mut net.theta);
    let shape = net.clone();
    let log = adam_train(&mut theta, x.rows(), &p.train, seed, |t, idx| {
        shape.batch_gradient(t, x, y, idx)
    })?;
    net.theta = theta;
    Ok((net, log))
}
