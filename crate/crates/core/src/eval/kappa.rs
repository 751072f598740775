use serde::{Deserialize, Serialize};

use crate::corpus::{LikertClass, NUM_CLASSES};
use crate::error::{AlqaError, Result};

/// Ratings as a raters x datasets table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaterPanel {
    pub labels: Vec<Vec<LikertClass>>,
    /// Agreement order reported alongside kappa.
    pub g: u32,
}

impl RaterPanel {
    pub fn new(labels: Vec<Vec<LikertClass>>, g: u32) -> Result<Self> {
        let width = labels.first().map(Vec::len).unwrap_or(0);
        if labels.is_empty() || width == 0 {
            return Err(AlqaError::Parameter("empty rater panel".into()));
        }
        if labels.iter().any(|row| row.len() != width) {
            return Err(AlqaError::Parameter(
                "every rater must score every dataset".into(),
            ));
        }
        Ok(Self { labels, g })
    }

    pub fn n_raters(&self) -> usize {
        self.labels.len()
    }

    pub fn n_datasets(&self) -> usize {
        self.labels[0].len()
    }

    pub fn column(&self, dataset: usize) -> Vec<LikertClass> {
        self.labels.iter().map(|row| row[dataset]).collect()
    }
}

/// Category-agreement weights w(i, j) with w(i, i) = 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Unweighted,
    Linear,
    Quadratic,
    Matrix(Vec<Vec<f64>>),
}

impl Weighting {
    pub fn weight(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = i.abs_diff(j) as f64 / (k - 1) as f64;
        match self {
            Weighting::Unweighted => f64::from(u8::from(i == j)),
            Weighting::Linear => 1.0 - d,
            Weighting::Quadratic => 1.0 - d * d,
            Weighting::Matrix(m) => m[i][j],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// `None` when expected agreement is 1 (a single category everywhere).
    pub kappa: Option<f64>,
    pub observed: f64,
    pub expected: f64,
    pub g: u32,
}

/// Weighted Fleiss' kappa over K = 5 categories.
pub fn rater_agreement(panel: &RaterPanel, weighting: &Weighting) -> Result<Agreement> {
    let n = panel.n_raters();
    let n_items = panel.n_datasets();
    if n < 2 || n_items < 2 {
        return Err(AlqaError::Parameter(
            "agreement needs at least 2 raters and 2 datasets".into(),
        ));
    }
    let k = NUM_CLASSES;
    if let Weighting::Matrix(m) = weighting {
        if m.len() != k || m.iter().any(|row| row.len() != k) {
            return Err(AlqaError::DimensionMismatch {
                expected: k,
                actual: m.len(),
            });
        }
    }
    let w: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| weighting.weight(i, j, k)).collect())
        .collect();

    let mut totals = vec![0.0; k];
    let mut observed = 0.0;
    for item in 0..n_items {
        let mut counts = vec![0.0; k];
        for row in &panel.labels {
            counts[row[item].index()] += 1.0;
        }
        // Σ_k r_k (Σ_l w_kl r_l - 1) / (n (n - 1))
        let agree: f64 = (0..k)
            .map(|a| {
                let weighted: f64 = (0..k).map(|b| w[a][b] * counts[b]).sum();
                counts[a] * (weighted - 1.0)
            })
            .sum();
        observed += agree / (n * (n - 1)) as f64;
        for (t, c) in totals.iter_mut().zip(&counts) {
            *t += c;
        }
    }
    observed /= n_items as f64;

    let grand = (n * n_items) as f64;
    let shares: Vec<f64> = totals.iter().map(|t| t / grand).collect();
    let expected: f64 = (0..k)
        .flat_map(|a| (0..k).map(move |b| (a, b)))
        .map(|(a, b)| w[a][b] * shares[a] * shares[b])
        .sum();

    let kappa = if (1.0 - expected).abs() < 1e-15 {
        None
    } else {
        Some((observed - expected) / (1.0 - expected))
    };
    Ok(Agreement {
        kappa,
        observed,
        expected,
        g: panel.g,
    })
}

/// Lower median of a set of ratings.
pub fn median_class(votes: &[LikertClass]) -> Result<LikertClass> {
    if votes.is_empty() {
        return Err(AlqaError::Parameter("median of no ratings".into()));
    }
    let mut sorted = votes.to_vec();
    sorted.sort_unstable();
    Ok(sorted[(sorted.len() - 1) / 2])
}

/// Per-dataset lower median across raters.
pub fn fuse_labels(panel: &RaterPanel) -> Result<Vec<LikertClass>> {
    (0..panel.n_datasets())
        .map(|d| median_class(&panel.column(d)))
        .collect()
}
