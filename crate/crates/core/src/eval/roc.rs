use serde::{Deserialize, Serialize};

use crate::corpus::LikertClass;
use crate::error::{AlqaError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRoc {
    pub class: u8,
    /// (FPR, TPR) from (0, 0) to (1, 1), one step per distinct score.
    pub points: Vec<(f64, f64)>,
    /// `None` when the class has no positives or no negatives.
    pub auc: Option<f64>,
}

/// One-vs-rest ROC for each class; equal scores form a single threshold step.
pub fn roc_auc_ovr(scores: &[Vec<f64>], truth: &[LikertClass], k: usize) -> Result<Vec<ClassRoc>> {
    if scores.len() != truth.len() {
        return Err(AlqaError::DimensionMismatch {
            expected: truth.len(),
            actual: scores.len(),
        });
    }
    for row in scores {
        if row.len() != k {
            return Err(AlqaError::DimensionMismatch {
                expected: k,
                actual: row.len(),
            });
        }
        if row.iter().any(|s| !s.is_finite()) {
            return Err(AlqaError::NonFinite("ROC scores".into()));
        }
    }
    Ok((0..k)
        .map(|class| {
            let labels: Vec<bool> = truth.iter().map(|t| t.index() == class).collect();
            let column: Vec<f64> = scores.iter().map(|r| r[class]).collect();
            let (points, auc) = binary_roc(&column, &labels);
            ClassRoc {
                class: class as u8 + 1,
                points,
                auc,
            }
        })
        .collect())
}

fn binary_roc(scores: &[f64], positive: &[bool]) -> (Vec<(f64, f64)>, Option<f64>) {
    let n_pos = positive.iter().filter(|p| **p).count() as u64;
    let n_neg = positive.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return (Vec::new(), None);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    // twice the trapezoid area in units of (1/n_neg) x (1/n_pos)
    let mut doubled_area: u64 = 0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut dtp, mut dfp) = (0u64, 0u64);
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                dtp += 1;
            } else {
                dfp += 1;
            }
            i += 1;
        }
        doubled_area += dfp * (2 * tp + dtp);
        tp += dtp;
        fp += dfp;
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    let auc = doubled_area as f64 / (2 * n_pos * n_neg) as f64;
    (points, Some(auc))
}
