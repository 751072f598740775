use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Splits, TestCaseDatabase};
use crate::error::{AlqaError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            validation: 0.10,
            test: 0.20,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p))
            || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(AlqaError::Parameter(format!(
                "split ratios {parts:?} must be in [0, 1] and sum to 1"
            )));
        }
        Ok(())
    }
}

/// Patient-disjoint train/validation/test assignment. Sizes are rounded to
/// whole patients; every volume of a patient lands in the same split.
pub fn split_database(db: &TestCaseDatabase, ratios: SplitRatios, seed: u64) -> Result<Splits> {
    ratios.validate()?;
    let mut by_patient: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for v in db.volumes.values() {
        if v.patient_id.is_empty() {
            return Err(AlqaError::Parameter(format!("volume {} has no patient id", v.id)));
        }
        by_patient.entry(&v.patient_id).or_default().push(&v.id);
    }
    let n = by_patient.len();
    if n < 3 {
        return Err(AlqaError::Parameter(format!(
            "need at least 3 patients to split, found {n}"
        )));
    }
    let mut patients: Vec<&str> = by_patient.keys().copied().collect();
    patients.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n_train = ((ratios.train * n as f64).round() as usize).min(n);
    let n_val = ((ratios.validation * n as f64).round() as usize).min(n - n_train);

    let collect = |range: &[&str]| -> BTreeSet<String> {
        range
            .iter()
            .flat_map(|p| by_patient[p].iter().map(|id| id.to_string()))
            .collect()
    };
    Ok(Splits {
        train: collect(&patients[..n_train]),
        validation: collect(&patients[n_train..n_train + n_val]),
        test: collect(&patients[n_train + n_val..]),
    })
}
