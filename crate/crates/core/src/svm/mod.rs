//! Soft-margin RBF support vector machines: an SMO dual solver, Platt
//! calibration, one-against-one multi-class combination with pairwise
//! coupling, and cross-validated grid search.

mod grid;
mod multiclass;
mod platt;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{AlqaError, Result};

pub use grid::{default_c_grid, default_gamma_grid, desk_c_grid, desk_gamma_grid, grid_search_cv, GridResult};
pub use multiclass::{couple_pairwise, train_ovo, OvoSvmModel, PairMachine};
pub use platt::{fit_platt, fit_platt_values, platt_objective, PlattSigmoid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: f64,
    /// Stopping threshold on the maximal KKT violation.
    pub smo_tol: f64,
    /// Upper bound on SMO pair updates.
    pub max_iterations: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: 1.0 / crate::reduction::DEFAULT_R_SVM as f64,
            smo_tol: 1e-3,
            max_iterations: 10_000_000,
        }
    }
}

impl SvmConfig {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self { c, gamma, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite() && self.gamma > 0.0 && self.gamma.is_finite() && self.smo_tol > 0.0) {
            return Err(AlqaError::Parameter(format!("invalid SVM config {self:?}")));
        }
        Ok(())
    }
}

pub fn squared_distance(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// exp(−γ‖x − z‖²).
pub fn rbf_kernel(x: &[f64], z: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != z.len() {
        return Err(AlqaError::DimensionMismatch {
            expected: x.len(),
            actual: z.len(),
        });
    }
    Ok((-gamma * squared_distance(x, z)).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    /// αᵢyᵢ per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub platt: PlattSigmoid,
    /// Maximal KKT violation at termination.
    pub kkt_violation: f64,
    /// Σα − ½ΣΣ αᵢαⱼyᵢyⱼK(xᵢ, xⱼ) at termination.
    pub dual_objective: f64,
    pub iterations: usize,
}

impl BinarySvm {
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, a)| a * (-self.gamma * squared_distance(sv, x)).exp())
            .sum::<f64>()
            + self.bias
    }

    /// Calibrated P(y = +1 | x).
    pub fn probability(&self, x: &[f64]) -> f64 {
        self.platt.probability(self.decision_value(x))
    }
}

/// Canonical sample order: by label, then lexicographically by features.
/// Training in this order makes the solver independent of input order.
pub(crate) fn canonical_order(x: &[&[f64]], y: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| {
        y[a].total_cmp(&y[b]).then_with(|| {
            x[a].iter()
                .zip(x[b])
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
    });
    idx
}

pub(crate) struct SmoSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub violation: f64,
    pub objective: f64,
    pub iterations: usize,
}

/// SMO on min ½αᵀQα − eᵀα, 0 ≤ α ≤ C, yᵀα = 0 with Q = (yyᵀ)∘K, choosing
/// the maximal violating pair each step. `k` is the n×n kernel matrix.
pub(crate) fn smo(k: &[f64], y: &[f64], c: f64, tol: f64, max_iterations: usize) -> SmoSolution {
    let n = y.len();
    let kk = |i: usize, j: usize| k[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
    let mut iterations = 0;
    let mut violation;
    loop {
        let (mut gmax, mut gmin) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        violation = if i == usize::MAX || j == usize::MAX { 0.0 } else { gmax - gmin };
        if violation < tol || iterations >= max_iterations {
            if iterations >= max_iterations {
                log::warn!("SMO stopped at the iteration cap with violation {violation}");
            }
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (kk(i, i) + kk(j, j) - 2.0 * kk(i, j)).max(1e-12);
        if y[i] != y[j] {
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
            grad[t] += y[t] * (y[i] * kk(t, i) * di + y[j] * kk(t, j) * dj);
        }
    }

    let (mut ub, mut lb, mut free_sum, mut free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };
    // f(α) = ½αᵀ(G − (−e)) − eᵀα = ½ Σ α(G − 1)
    let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
    SmoSolution {
        alpha,
        rho,
        violation,
        objective,
        iterations,
    }
}

pub(crate) fn kernel_matrix(x: &[&[f64]], gamma: f64) -> Vec<f64> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = (-gamma * squared_distance(x[i], x[j])).exp();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Builds a binary SVM from samples already in canonical order.
pub(crate) fn fit_sorted(x: &[&[f64]], y: &[f64], k: &[f64], cfg: &SvmConfig) -> BinarySvm {
    let sol = smo(k, y, cfg.c, cfg.smo_tol, cfg.max_iterations);
    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for t in 0..y.len() {
        if sol.alpha[t] > 0.0 {
            support_vectors.push(x[t].to_vec());
            dual_coef.push(sol.alpha[t] * y[t]);
        }
    }
    BinarySvm {
        support_vectors,
        dual_coef,
        bias: -sol.rho,
        gamma: cfg.gamma,
        c: cfg.c,
        platt: PlattSigmoid::default(),
        kkt_violation: sol.violation,
        dual_objective: -sol.objective,
        iterations: sol.iterations,
    }
}

pub(crate) fn check_binary_input(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(AlqaError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let d = x.first().map(Vec::len).unwrap_or(0);
    if x.iter().any(|r| r.len() != d) {
        return Err(AlqaError::Shape("ragged training rows".into()));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AlqaError::NonFinite("SVM training data".into()));
    }
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(AlqaError::Training("binary labels must be ±1".into()));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(AlqaError::Training("binary SVM needs both classes".into()));
    }
    Ok(())
}

/// Trains a soft-margin RBF SVM with labels in {−1, +1}. The Platt sigmoid
/// is left at its default; see [`fit_platt`].
pub fn train_binary(x: &[Vec<f64>], y: &[f64], cfg: &SvmConfig) -> Result<BinarySvm> {
    cfg.validate()?;
    check_binary_input(x, y)?;
    let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
    let order = canonical_order(&refs, y);
    let xs: Vec<&[f64]> = order.iter().map(|&i| refs[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let k = kernel_matrix(&xs, cfg.gamma);
    Ok(fit_sorted(&xs, &ys, &k, cfg))
}
