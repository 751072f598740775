use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::multiclass::fit_pair;
use super::{canonical_order, squared_distance, OvoSvmModel, PairMachine, SvmConfig};
use crate::corpus::LikertClass;
use crate::cv::{argmax_first, stratified_folds};
use crate::error::{AlqaError, Result};

/// C ∈ {2⁻⁵, 2⁻⁴, …, 2¹⁵}.
pub fn default_c_grid() -> Vec<f64> {
    (-5..=15).map(|e| 2f64.powi(e)).collect()
}

/// γ ∈ {2⁻¹⁵, 2⁻¹³, …, 2³}.
pub fn default_gamma_grid() -> Vec<f64> {
    (-15..=3).step_by(2).map(|e| 2f64.powi(e)).collect()
}

/// Coarse grid for desk-scale runs.
pub fn desk_c_grid() -> Vec<f64> {
    [-1, 1, 3, 5, 7].iter().map(|&e| 2f64.powi(e)).collect()
}

pub fn desk_gamma_grid() -> Vec<f64> {
    [-9, -7, -5, -3].iter().map(|&e| 2f64.powi(e)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub c: f64,
    pub gamma: f64,
    pub cv_accuracy: f64,
    pub folds: usize,
    /// (C, γ, accuracy) for every evaluated point.
    pub scores: Vec<(f64, f64, f64)>,
}

/// Stratified k-fold accuracy for every (C, γ); the best point wins with
/// ties going to smaller C, then smaller γ.
pub fn grid_search_cv(
    x: &[Vec<f64>],
    y: &[LikertClass],
    c_grid: &[f64],
    gamma_grid: &[f64],
    folds: usize,
    seed: u64,
    base: &SvmConfig,
) -> Result<GridResult> {
    if c_grid.is_empty() || gamma_grid.is_empty() {
        return Err(AlqaError::Parameter("empty SVM parameter grid".into()));
    }
    if x.len() != y.len() {
        return Err(AlqaError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let mut cs = c_grid.to_vec();
    let mut gs = gamma_grid.to_vec();
    cs.sort_by(f64::total_cmp);
    gs.sort_by(f64::total_cmp);
    let (assign, k) = stratified_folds(y, folds, seed)?;

    let n = x.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = squared_distance(&x[i], &x[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut points = Vec::new();
    let mut correct = Vec::new();
    for &c in &cs {
        for &gamma in &gs {
            let cfg = SvmConfig { c, gamma, ..base.clone() };
            cfg.validate()?;
            let mut hits = 0;
            for fold in 0..k {
                let train: Vec<usize> = (0..n).filter(|&i| assign[i] != fold).collect();
                let model = train_indexed(x, y, &train, &dist, &cfg)?;
                hits += (0..n).filter(|&i| assign[i] == fold && model.predict_class(&x[i]) == y[i]).count();
            }
            points.push((c, gamma));
            correct.push(hits);
        }
    }
    let best = argmax_first(&correct).expect("grid is non-empty");
    let scores = points
        .iter()
        .zip(&correct)
        .map(|(&(c, g), &h)| (c, g, h as f64 / n as f64))
        .collect();
    Ok(GridResult {
        c: points[best].0,
        gamma: points[best].1,
        cv_accuracy: correct[best] as f64 / n as f64,
        folds: k,
        scores,
    })
}

/// OvO training on a subset, reusing precomputed squared distances.
fn train_indexed(x: &[Vec<f64>], y: &[LikertClass], subset: &[usize], dist: &[f64], cfg: &SvmConfig) -> Result<OvoSvmModel> {
    let n = x.len();
    let classes: Vec<LikertClass> = subset.iter().map(|&i| y[i]).collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(AlqaError::Training("training fold contains a single class".into()));
    }
    let mut machines = Vec::new();
    for (a, &first) in classes.iter().enumerate() {
        for &second in &classes[a + 1..] {
            let idx: Vec<usize> = subset.iter().copied().filter(|&i| y[i] == first || y[i] == second).collect();
            let refs: Vec<&[f64]> = idx.iter().map(|&i| x[i].as_slice()).collect();
            let py: Vec<f64> = idx.iter().map(|&i| if y[i] == first { 1.0 } else { -1.0 }).collect();
            let order = canonical_order(&refs, &py);
            let global: Vec<usize> = order.iter().map(|&o| idx[o]).collect();
            let xs: Vec<&[f64]> = order.iter().map(|&o| refs[o]).collect();
            let ys: Vec<f64> = order.iter().map(|&o| py[o]).collect();
            let m = global.len();
            let mut k = vec![0.0; m * m];
            for p in 0..m {
                for q in 0..m {
                    k[p * m + q] = if p == q { 1.0 } else { (-cfg.gamma * dist[global[p] * n + global[q]]).exp() };
                }
            }
            machines.push(PairMachine {
                first,
                second,
                svm: fit_pair(&xs, &ys, &k, cfg)?,
            });
        }
    }
    Ok(OvoSvmModel {
        classes,
        machines,
        config: cfg.clone(),
    })
}
