use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::platt::fit_platt_values;
use super::{canonical_order, check_binary_input, fit_sorted, kernel_matrix, BinarySvm, SvmConfig};
use crate::corpus::{LikertClass, NUM_CLASSES};
use crate::error::{AlqaError, Result};

/// Machine for classes (first, second) with first < second; +1 = first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMachine {
    pub first: LikertClass,
    pub second: LikertClass,
    pub svm: BinarySvm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OvoSvmModel {
    /// Classes the model was trained on, ascending.
    pub classes: Vec<LikertClass>,
    pub machines: Vec<PairMachine>,
    pub config: SvmConfig,
}

/// Clamp for pairwise probabilities before coupling.
const MIN_PAIR_PROB: f64 = 1e-7;

/// Wu–Lin–Weng second coupling method: minimizes Σᵢ Σⱼ≠ᵢ (rⱼᵢpᵢ − rᵢⱼpⱼ)²
/// over the simplex by fixed-point iteration. `r[i][j]` is P(i | i or j).
pub fn couple_pairwise(r: &[Vec<f64>]) -> Vec<f64> {
    let k = r.len();
    if k == 1 {
        return vec![1.0];
    }
    let mut q = vec![vec![0.0; k]; k];
    for t in 0..k {
        for j in 0..k {
            if j != t {
                q[t][t] += r[j][t] * r[j][t];
                q[t][j] = -r[j][t] * r[t][j];
            }
        }
    }
    let mut p = vec![1.0 / k as f64; k];
    let mut qp = vec![0.0; k];
    for _ in 0..1000 {
        let mut pqp = 0.0;
        for t in 0..k {
            qp[t] = (0..k).map(|j| q[t][j] * p[j]).sum();
            pqp += p[t] * qp[t];
        }
        let max_error = qp.iter().map(|v| (v - pqp).abs()).fold(0.0, f64::max);
        if max_error < 1e-10 {
            break;
        }
        for t in 0..k {
            let diff = (-qp[t] + pqp) / q[t][t];
            p[t] += diff;
            pqp = (pqp + diff * (diff * q[t][t] + 2.0 * qp[t])) / ((1.0 + diff) * (1.0 + diff));
            for j in 0..k {
                qp[j] = (qp[j] + diff * q[t][j]) / (1.0 + diff);
                p[j] /= 1.0 + diff;
            }
        }
    }
    let total: f64 = p.iter().sum();
    p.iter().map(|v| v / total).collect()
}

/// One calibrated binary machine per pair of `classes`, each trained only on
/// that pair's samples. Every listed class must have samples.
pub fn train_ovo(x: &[Vec<f64>], y: &[LikertClass], classes: &[LikertClass], cfg: &SvmConfig) -> Result<OvoSvmModel> {
    cfg.validate()?;
    let classes: Vec<LikertClass> = classes.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(AlqaError::Training("one-against-one needs at least 2 classes".into()));
    }
    if x.len() != y.len() {
        return Err(AlqaError::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    for c in &classes {
        if !y.contains(c) {
            return Err(AlqaError::Training(format!("class {} has no training samples", c.value())));
        }
    }
    let mut machines = Vec::new();
    for (a, &first) in classes.iter().enumerate() {
        for &second in &classes[a + 1..] {
            let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == first || y[i] == second).collect();
            let px: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
            let py: Vec<f64> = idx.iter().map(|&i| if y[i] == first { 1.0 } else { -1.0 }).collect();
            check_binary_input(&px, &py)?;
            let refs: Vec<&[f64]> = px.iter().map(Vec::as_slice).collect();
            let order = canonical_order(&refs, &py);
            let xs: Vec<&[f64]> = order.iter().map(|&i| refs[i]).collect();
            let ys: Vec<f64> = order.iter().map(|&i| py[i]).collect();
            let k = kernel_matrix(&xs, cfg.gamma);
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

/// SMO fit plus Platt calibration on the training decision values, which
/// are read off the kernel matrix.
pub(crate) fn fit_pair(xs: &[&[f64]], ys: &[f64], k: &[f64], cfg: &SvmConfig) -> Result<BinarySvm> {
    let mut svm = fit_sorted(xs, ys, k, cfg);
    let decisions: Vec<f64> = (0..ys.len()).map(|i| svm.decision_value(xs[i])).collect();
    svm.platt = fit_platt_values(&decisions, ys)?;
    Ok(svm)
}

impl OvoSvmModel {
    fn position(&self, c: LikertClass) -> usize {
        self.classes.iter().position(|x| *x == c).expect("machine classes come from the model")
    }

    /// Decision value of every pair machine, in machine order.
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        self.machines.iter().map(|m| m.svm.decision_value(x)).collect()
    }

    /// Majority vote over the given pairwise decision values. Ties go to the
    /// class with the larger summed |decision| over its won pairs, then to
    /// the lower class.
    pub fn vote(&self, decisions: &[f64]) -> LikertClass {
        let n = self.classes.len();
        let mut votes = vec![0usize; n];
        let mut strength = vec![0.0; n];
        for (m, &f) in self.machines.iter().zip(decisions) {
            let winner = if f > 0.0 { m.first } else { m.second };
            let w = self.position(winner);
            votes[w] += 1;
            strength[w] += f.abs();
        }
        let mut best = 0;
        for c in 1..n {
            if votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best]) {
                best = c;
            }
        }
        self.classes[best]
    }

    pub fn predict_class(&self, x: &[f64]) -> LikertClass {
        self.vote(&self.decision_values(x))
    }

    /// Probabilities over all Likert classes (absent classes get 0).
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let k = self.classes.len();
        let mut r = vec![vec![0.0; k]; k];
        for m in &self.machines {
            let (i, j) = (self.position(m.first), self.position(m.second));
            let p = m.svm.probability(x).clamp(MIN_PAIR_PROB, 1.0 - MIN_PAIR_PROB);
            r[i][j] = p;
            r[j][i] = 1.0 - p;
        }
        let coupled = couple_pairwise(&r);
        let mut out = vec![0.0; NUM_CLASSES];
        for (c, p) in self.classes.iter().zip(coupled) {
            out[c.index()] = p;
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(AlqaError::NotFound(path.to_path_buf()));
        }
        let model: Self = serde_json::from_slice(&fs::read(path)?).map_err(|e| AlqaError::Corrupt {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let k = model.classes.len();
        if model.machines.len() != k * (k - 1) / 2 {
            return Err(AlqaError::Corrupt {
                path: path.to_path_buf(),
                reason: "machine count does not match the class list".into(),
            });
        }
        Ok(model)
    }
}
