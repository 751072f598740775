//! Accuracy, confusion matrices, one-vs-rest ROC/AUC, rater fusion and
//! agreement, and the feature correlation/significance report.

mod kappa;
mod roc;
mod significance;

use serde::{Deserialize, Serialize};

use crate::corpus::LikertClass;
use crate::error::{AlqaError, Result};

pub use kappa::{fuse_labels, median_class, rater_agreement, Agreement, RaterPanel, Weighting};
pub use roc::{roc_auc_ovr, ClassRoc};
pub use significance::{feature_significance, write_csv_grid, write_pgm, SignificanceReport};

/// Fraction of exact matches.
pub fn accuracy(predicted: &[LikertClass], truth: &[LikertClass]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(AlqaError::DimensionMismatch {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(AlqaError::Parameter("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: LikertClass, predicted: LikertClass) -> usize {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }
}

pub fn confusion_matrix(
    predicted: &[LikertClass],
    truth: &[LikertClass],
    k: usize,
) -> Result<ConfusionMatrix> {
    if predicted.len() != truth.len() {
        return Err(AlqaError::DimensionMismatch {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    let mut counts = vec![vec![0usize; k]; k];
    for (p, t) in predicted.iter().zip(truth) {
        if p.index() >= k || t.index() >= k {
            return Err(AlqaError::Parameter(format!(
                "label outside [1, {k}]: true {t}, predicted {p}"
            )));
        }
        counts[t.index()][p.index()] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub roc: Vec<ClassRoc>,
    /// Mean over classes with a defined AUC.
    pub mean_auc: Option<f64>,
    pub n_test: usize,
}

pub fn evaluate(
    predicted: &[LikertClass],
    truth: &[LikertClass],
    scores: &[Vec<f64>],
    k: usize,
) -> Result<EvaluationReport> {
    let accuracy = accuracy(predicted, truth)?;
    let confusion = confusion_matrix(predicted, truth, k)?;
    let roc = roc_auc_ovr(scores, truth, k)?;
    let aucs: Vec<f64> = roc.iter().filter_map(|r| r.auc).collect();
    let mean_auc = (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64);
    Ok(EvaluationReport {
        accuracy,
        confusion,
        roc,
        mean_auc,
        n_test: truth.len(),
    })
}
