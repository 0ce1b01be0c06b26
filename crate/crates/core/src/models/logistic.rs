//! Binary L2-penalized logistic regression solved by truncated Newton.
//!
//! Objective: `0.5 * |w|^2 + C * sum_i log(1 + exp(-s_i * (w.x_i + b)))` with
//! `s_i = +/-1` and an unpenalized intercept `b`. Each outer iteration solves
//! `H p = -g` approximately by conjugate gradients using Hessian-vector
//! products, then halves the step until the Armijo condition holds.

use serde::{Deserialize, Serialize};

use super::{sigmoid, ModelSpec};
use crate::error::Result;
use crate::matrix::Matrix;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct LogisticParams {
    pub c: f64,
    pub penalized: bool,
    pub max_iter: usize,
    pub tol: f64,
}

impl LogisticParams {
    pub(crate) fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let penalized = spec.choice("penalty", &["l2", "none"])? == "l2";
        spec.choice("solver", &["newton-cg"])?;
        Ok(Self {
            c: spec.positive_f64("C")?,
            penalized,
            max_iter: spec.positive_usize("max_iter")?,
            tol: spec.positive_f64("tol")?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn decision_value(&self, row: &[f64]) -> f64 {
        self.coef.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + self.intercept
    }

    /// P(class index 1 | row).
    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision_value(row))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonCgReport {
    /// Penalized objective at the start and after every accepted step.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_gradient_norm: f64,
}

struct Problem<'a> {
    x: &'a Matrix,
    sign: Vec<f64>,
    c: f64,
    penalized: bool,
}

// parameter vector layout: [w_0 .. w_{d-1}, b]
impl Problem<'_> {
    fn margins(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.x.cols();
        self.x
            .iter_rows()
            .map(|r| r.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>() + theta[d])
            .collect()
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        let d = self.x.cols();
        let reg = if self.penalized {
            0.5 * theta[..d].iter().map(|w| w * w).sum::<f64>()
        } else {
            0.0
        };
        let loss: f64 = self
            .margins(theta)
            .iter()
            .zip(&self.sign)
            .map(|(z, s)| log1p_exp(-s * z))
            .sum();
        reg + self.c * loss
    }

    /// Gradient and the Hessian weights `sigma(z)(1 - sigma(z))`.
    fn gradient(&self, theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.x.cols();
        let mut g = vec![0.0; d + 1];
        if self.penalized {
            g[..d].copy_from_slice(&theta[..d]);
        }
        let z = self.margins(theta);
        let mut curv = Vec::with_capacity(z.len());
        for (i, (zi, s)) in z.iter().zip(&self.sign).enumerate() {
            let coeff = self.c * (sigmoid(s * zi) - 1.0) * s;
            for (gj, xj) in g[..d].iter_mut().zip(self.x.row(i)) {
                *gj += coeff * xj;
            }
            g[d] += coeff;
            let p = sigmoid(*zi);
            curv.push(p * (1.0 - p));
        }
        (g, curv)
    }

    fn hess_vec(&self, curv: &[f64], v: &[f64]) -> Vec<f64> {
        let d = self.x.cols();
        let mut out = vec![0.0; d + 1];
        if self.penalized {
            out[..d].copy_from_slice(&v[..d]);
        }
        for (i, r) in self.x.iter_rows().enumerate() {
            let xv = r.iter().zip(&v[..d]).map(|(a, b)| a * b).sum::<f64>() + v[d];
            let coeff = self.c * curv[i] * xv;
            for (o, xj) in out[..d].iter_mut().zip(r) {
                *o += coeff * xj;
            }
            out[d] += coeff;
        }
        out
    }
}

fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients on `H p = -g`, stopping at relative residual
/// `min(0.5, sqrt(|g|)) * |g|` or on non-positive curvature.
fn cg_solve(problem: &Problem<'_>, curv: &[f64], g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let gnorm = dot(g, g).sqrt();
    let tol = 0.5f64.min(gnorm.sqrt()) * gnorm;
    let mut p = vec![0.0; n];
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut dir = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..(20 * n).max(50) {
        if rr.sqrt() <= tol {
            break;
        }
        let hd = problem.hess_vec(curv, &dir);
        let curvature = dot(&dir, &hd);
        if curvature <= 0.0 {
            if p.iter().all(|v| *v == 0.0) {
                p = r.clone();
            }
            break;
        }
        let alpha = rr / curvature;
        for i in 0..n {
            p[i] += alpha * dir[i];
            r[i] -= alpha * hd[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            dir[i] = r[i] + beta * dir[i];
        }
    }
    p
}

/// `y` holds class indices 0/1; index 1 is the positive side.
pub(crate) fn fit(params: &LogisticParams, x: &Matrix, y: &[usize]) -> Result<(LogisticModel, NewtonCgReport)> {
    let d = x.cols();
    let problem = Problem {
        x,
        sign: y.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect(),
        c: params.c,
        penalized: params.penalized,
    };
    let mut theta = vec![0.0; d + 1];
    let mut f = problem.objective(&theta);
    let mut objective = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let mut gmax = f64::INFINITY;
    for _ in 0..params.max_iter {
        let (g, curv) = problem.gradient(&theta);
        gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= params.tol {
            converged = true;
            break;
        }
        let p = cg_solve(&problem, &curv, &g);
        let slope = dot(&g, &p);
        let mut step = 1.0;
        let mut accepted = None;
        while step >= MIN_STEP {
            let cand: Vec<f64> = theta.iter().zip(&p).map(|(t, pi)| t + step * pi).collect();
            let fc = problem.objective(&cand);
            if fc <= f + ARMIJO * step * slope.min(0.0) {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((cand, fc)) => {
                theta = cand;
                f = fc;
                objective.push(f);
            }
            None => break,
        }
    }
    if !converged {
        let (g, _) = problem.gradient(&theta);
        gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        converged = gmax <= params.tol;
    }
    if !converged {
        log::debug!("newton-cg stopped after {iterations} iterations, |g|_inf = {gmax:e}");
    }
    let intercept = theta.pop().expect("intercept slot");
    Ok((
        LogisticModel { coef: theta, intercept },
        NewtonCgReport {
            objective,
            iterations,
            converged,
            final_gradient_norm: gmax,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LogisticParams {
        LogisticParams {
            c: 1.0,
            penalized: true,
            max_iter: 20,
            tol: 1e-4,
        }
    }

    #[test]
    fn symmetric_data_gives_zero_model() {
        let x = Matrix::from_rows(&[[1.0], [-1.0], [1.0], [-1.0]]).unwrap();
        let (m, _) = fit(&params(), &x, &[1, 1, 0, 0]).unwrap();
        assert!(m.coef[0].abs() < 1e-12 && m.intercept.abs() < 1e-12);
    }

    #[test]
    fn positive_side_gets_positive_weight() {
        let x = Matrix::from_rows(&[[-2.0], [-1.0], [-0.5], [0.3], [1.0], [2.5]]).unwrap();
        let y = [0, 0, 1, 0, 1, 1];
        // gradient of the loss at zero: -0.5 * sum(s_i x_i) < 0, so w moves positive
        let (m, report) = fit(&params(), &x, &y).unwrap();
        assert!(m.coef[0] > 0.0);
        for w in report.objective.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn converged_gradient_is_small() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.5], [2.0, -1.0], [3.0, 0.0], [0.5, 2.0], [2.5, 1.5]]).unwrap();
        let y = [0, 0, 1, 1, 0, 1];
        let (_, r) = fit(&params(), &x, &y).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.final_gradient_norm <= 1e-4);
        assert!(r.iterations <= 20);
    }

    #[test]
    fn hessian_vector_matches_finite_difference_of_gradient() {
        let x = Matrix::from_rows(&[[0.2, 1.0], [1.0, -0.5], [-2.0, 0.3]]).unwrap();
        let p = Problem {
            x: &x,
            sign: vec![1.0, -1.0, 1.0],
            c: 0.7,
            penalized: true,
        };
        let theta = [0.3, -0.2, 0.1];
        let v = [0.5, 1.0, -0.25];
        let (_, curv) = p.gradient(&theta);
        let hv = p.hess_vec(&curv, &v);
        let h = 1e-6;
        let plus: Vec<f64> = theta.iter().zip(&v).map(|(t, vi)| t + h * vi).collect();
        let minus: Vec<f64> = theta.iter().zip(&v).map(|(t, vi)| t - h * vi).collect();
        let (gp, _) = p.gradient(&plus);
        let (gm, _) = p.gradient(&minus);
        for i in 0..3 {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            assert!((fd - hv[i]).abs() < 1e-7, "{i}: {fd} vs {}", hv[i]);
        }
    }
}
