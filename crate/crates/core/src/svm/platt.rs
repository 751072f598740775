use serde::{Deserialize, Serialize};

use super::BinarySvm;
use crate::error::{AlqaError, Result};

/// P(y = +1 | f) = 1 / (1 + exp(A·f + B)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlattSigmoid {
    pub a: f64,
    pub b: f64,
}

impl Default for PlattSigmoid {
    fn default() -> Self {
        Self { a: -1.0, b: 0.0 }
    }
}

impl PlattSigmoid {
    pub fn probability(&self, f: f64) -> f64 {
        let z = self.a * f + self.b;
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

fn targets(labels: &[f64]) -> Vec<f64> {
    let prior1 = labels.iter().filter(|y| **y > 0.0).count() as f64;
    let prior0 = labels.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    labels.iter().map(|y| if *y > 0.0 { hi } else { lo }).collect()
}

/// Negative log-likelihood of the smoothed targets under (A, B).
pub fn platt_objective(decisions: &[f64], labels: &[f64], a: f64, b: f64) -> f64 {
    decisions
        .iter()
        .zip(targets(labels))
        .map(|(f, t)| {
            let z = f * a + b;
            if z >= 0.0 {
                t * z + (-z).exp().ln_1p()
            } else {
                (t - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

/// Regularized maximum-likelihood sigmoid fit: Newton's method with
/// backtracking on the smoothed targets (prior₁+1)/(prior₁+2) and
/// 1/(prior₀+2).
pub fn fit_platt_values(decisions: &[f64], labels: &[f64]) -> Result<PlattSigmoid> {
    if decisions.len() != labels.len() || decisions.is_empty() {
        return Err(AlqaError::Training("Platt fit needs matching, non-empty inputs".into()));
    }
    let t = targets(labels);
    let prior1 = labels.iter().filter(|y| **y > 0.0).count() as f64;
    let prior0 = labels.len() as f64 - prior1;
    let (max_iter, min_step, sigma, eps) = (100, 1e-10, 1e-12, 1e-5);
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
    let mut fval = platt_objective(decisions, labels, a, b);
    for _ in 0..max_iter {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (f, ti) in decisions.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < eps && g2.abs() < eps {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = platt_objective(decisions, labels, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    Ok(PlattSigmoid { a, b })
}

/// Fits the sigmoid on the decision values of `svm` over (x, y).
pub fn fit_platt(svm: &BinarySvm, x: &[Vec<f64>], y: &[f64]) -> Result<PlattSigmoid> {
    let decisions: Vec<f64> = x.iter().map(|xi| svm.decision_value(xi)).collect();
    fit_platt_values(&decisions, y)
}
