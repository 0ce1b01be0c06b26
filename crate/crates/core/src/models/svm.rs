//! Soft-margin C-SVM trained by sequential minimal optimization.
//!
//! Working-set selection uses second-order information (maximal violating
//! pair refined by the largest guaranteed objective decrease). The full
//! kernel matrix is computed up front, which bounds practical training sets
//! to a few thousand rows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bad, HyperValue, ModelSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SvmKernel {
    Linear,
    Rbf { gamma: f64 },
    Poly { gamma: f64, coef0: f64, degree: u32 },
}

impl SvmKernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            SvmKernel::Linear => dot(a, b),
            SvmKernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            SvmKernel::Poly { gamma, coef0, degree } => (gamma * dot(a, b) + coef0).powi(degree as i32),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Gamma {
    Auto,
    Scale,
    Value(f64),
}

#[derive(Debug, Clone)]
pub(crate) struct SvmParams {
    kernel: String,
    gamma: Gamma,
    coef0: f64,
    degree: u32,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl SvmParams {
    pub(crate) fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let kernel = spec.choice("kernel", &["rbf", "linear", "poly"])?.to_string();
        let gamma = match spec.get("gamma") {
            HyperValue::Text(s) if s == "auto" => Gamma::Auto,
            HyperValue::Text(s) if s == "scale" => Gamma::Scale,
            HyperValue::Int(_) | HyperValue::Float(_) => Gamma::Value(spec.positive_f64("gamma")?),
            v => return Err(bad("gamma", format!("expected \"auto\", \"scale\" or a number, got {v}"))),
        };
        Ok(Self {
            kernel,
            gamma,
            coef0: spec.f64("coef0")?,
            degree: spec.positive_usize("degree")? as u32,
            c: spec.positive_f64("C")?,
            tol: spec.positive_f64("tol")?,
            max_iter: spec.positive_usize("max_iter")?,
        })
    }

    fn kernel(&self, x: &Matrix) -> SvmKernel {
        let d = x.cols().max(1) as f64;
        let gamma = match self.gamma {
            // "auto" is 1 / n_features
            Gamma::Auto => 1.0 / d,
            Gamma::Scale => {
                let v = x.as_slice();
                let n = v.len().max(1) as f64;
                let mean = v.iter().sum::<f64>() / n;
                let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
                if var > 0.0 {
                    1.0 / (d * var)
                } else {
                    1.0
                }
            }
            Gamma::Value(g) => g,
        };
        match self.kernel.as_str() {
            "linear" => SvmKernel::Linear,
            "poly" => SvmKernel::Poly {
                gamma,
                coef0: self.coef0,
                degree: self.degree,
            },
            _ => SvmKernel::Rbf { gamma },
        }
    }
}

/// `f(x) = sum_i coef_i * K(sv_i, x) + bias` with `coef_i = alpha_i * y_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: SvmKernel,
    pub support_vectors: Matrix,
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// All training duals, in training-row order.
    pub alphas: Vec<f64>,
    pub c: f64,
    pub iterations: usize,
    /// `m(alpha) - M(alpha)` at termination.
    pub kkt_violation: f64,
}

impl SvmModel {
    pub fn decision_value(&self, row: &[f64]) -> f64 {
        self.support_vectors
            .iter_rows()
            .zip(&self.dual_coef)
            .map(|(sv, c)| c * self.kernel.eval(sv, row))
            .sum::<f64>()
            + self.bias
    }
}

pub(crate) struct SmoOutput {
    pub alphas: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub violation: f64,
    pub converged: bool,
}

/// Solves `min 0.5 a'Qa - e'a` s.t. `0 <= a <= c`, `y'a = 0` with
/// `Q_ij = y_i y_j K_ij`.
pub(crate) fn smo(k: &[Vec<f64>], y: &[f64], c: f64, eps: f64, max_iter: usize) -> SmoOutput {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let mut iterations = 0;
    let mut violation = f64::INFINITY;
    let mut converged = false;

    while iterations < max_iter {
        // maximal violating index i
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let v = if y[t] > 0.0 {
                (!upper(alpha[t])).then_some(-grad[t])
            } else {
                (!lower(alpha[t])).then_some(grad[t])
            };
            if let Some(v) = v {
                if v >= gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let Some(i) = i_sel else {
            violation = 0.0;
            converged = true;
            break;
        };
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            let (g_term, eligible) = if y[t] > 0.0 {
                (grad[t], !lower(alpha[t]))
            } else {
                (-grad[t], !upper(alpha[t]))
            };
            if !eligible {
                continue;
            }
            gmax2 = gmax2.max(g_term);
            let diff = gmax + g_term;
            if diff > 0.0 {
                let quad = k[i][i] + k[t][t] - 2.0 * k[i][t];
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best_obj {
                    best_obj = obj;
                    j_sel = Some(t);
                }
            }
        }
        violation = gmax + gmax2;
        let Some(j) = j_sel.filter(|_| violation >= eps) else {
            converged = true;
            break;
        };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // offset from free duals, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else {
        0.0
    };
    SmoOutput {
        alphas: alpha,
        rho,
        iterations,
        violation: violation.max(0.0),
        converged,
    }
}

pub(crate) fn fit(p: &SvmParams, x: &Matrix, y: &[usize]) -> Result<SvmModel> {
    let kernel = p.kernel(x);
    let n = x.rows();
    let k: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| kernel.eval(x.row(i), x.row(j))).collect())
        .collect();
    let ys: Vec<f64> = y.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect();
    let out = smo(&k, &ys, p.c, p.tol, p.max_iter);
    if !out.converged {
        return Err(Error::SvmNotConverged {
            iterations: out.iterations,
            violation: out.violation,
        });
    }
    let sv: Vec<usize> = (0..n).filter(|&i| out.alphas[i] > 0.0).collect();
    Ok(SvmModel {
        kernel,
        support_vectors: x.select_rows(&sv),
        dual_coef: sv.iter().map(|&i| out.alphas[i] * ys[i]).collect(),
        bias: -out.rho,
        alphas: out.alphas,
        c: p.c,
        iterations: out.iterations,
        kkt_violation: out.violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram(x: &[[f64; 2]], kernel: SvmKernel) -> Vec<Vec<f64>> {
        x.iter().map(|a| x.iter().map(|b| kernel.eval(a, b)).collect()).collect()
    }

    #[test]
    fn identical_points_with_opposite_labels_hit_the_bound() {
        let x = [[0.5, 0.5], [0.5, 0.5]];
        let k = gram(&x, SvmKernel::Rbf { gamma: 0.5 });
        let out = smo(&k, &[1.0, -1.0], 1.0, 1e-3, 1000);
        assert!(out.converged);
        assert_eq!(out.alphas, vec![1.0, 1.0]);
    }

    #[test]
    fn equality_constraint_and_box_hold() {
        let x = [[0.0, 0.0], [1.0, 0.2], [0.1, 1.0], [2.0, 2.0], [1.5, 0.3], [0.2, 0.1]];
        let y = [1.0, -1.0, -1.0, 1.0, -1.0, 1.0];
        let k = gram(&x, SvmKernel::Rbf { gamma: 0.5 });
        let out = smo(&k, &y, 1.0, 1e-3, 10_000);
        assert!(out.converged && out.violation < 1e-3);
        let s: f64 = out.alphas.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(s.abs() <= 1e-8);
        assert!(out.alphas.iter().all(|&a| (0.0..=1.0).contains(&a)));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let x = [[0.0, 0.0], [1.0, 0.2], [0.1, 1.0], [2.0, 2.0]];
        let y = [1.0, -1.0, -1.0, 1.0];
        let k = gram(&x, SvmKernel::Rbf { gamma: 0.5 });
        let out = smo(&k, &y, 1.0, 1e-12, 1);
        assert!(!out.converged);
        assert_eq!(out.iterations, 1);
        assert!(out.violation > 0.0);
    }
}
