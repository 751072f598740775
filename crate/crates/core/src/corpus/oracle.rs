use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ArtifactSpec, LikertClass};
use crate::error::{AlqaError, Result};

/// Four strictly increasing cut points in (0, 1) separating the five classes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Thresholds([f64; 4]);

impl Thresholds {
    pub fn new(cuts: [f64; 4]) -> Result<Self> {
        let in_range = cuts.iter().all(|t| *t > 0.0 && *t < 1.0);
        let increasing = cuts.windows(2).all(|p| p[0] < p[1]);
        if !in_range || !increasing {
            return Err(AlqaError::Parameter(format!(
                "thresholds {cuts:?} must be strictly increasing within (0, 1)"
            )));
        }
        Ok(Self(cuts))
    }

    pub fn cuts(&self) -> &[f64; 4] {
        &self.0
    }

    /// Class for a combined severity score: one class per threshold reached.
    pub fn classify(&self, score: f64) -> LikertClass {
        let reached = self.0.iter().filter(|t| score >= **t).count();
        LikertClass::BEST.shifted(reached as i32)
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self([0.2, 0.4, 0.6, 0.8])
    }
}

impl TryFrom<[f64; 4]> for Thresholds {
    type Error = AlqaError;
    fn try_from(cuts: [f64; 4]) -> Result<Self> {
        Self::new(cuts)
    }
}

impl From<Thresholds> for [f64; 4] {
    fn from(t: Thresholds) -> [f64; 4] {
        t.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub thresholds: Thresholds,
    pub artifact_weight: f64,
    pub noise_weight: f64,
    /// Noise sigma that maps to a normalized noise score of 1.
    pub noise_reference: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            artifact_weight: 1.0,
            noise_weight: 1.0,
            noise_reference: 0.2,
        }
    }
}

/// Weighted max of artifact severity and normalized noise, in [0, 1].
pub fn severity_score(artifact: &ArtifactSpec, noise_sigma: f64, cfg: &OracleConfig) -> f64 {
    let noise = (noise_sigma / cfg.noise_reference).clamp(0.0, 1.0);
    (cfg.artifact_weight * artifact.severity)
        .max(cfg.noise_weight * noise)
        .clamp(0.0, 1.0)
}

pub fn oracle_label(artifact: &ArtifactSpec, noise_sigma: f64, cfg: &OracleConfig) -> LikertClass {
    cfg.thresholds.classify(severity_score(artifact, noise_sigma, cfg))
}

/// Each rater reports the true class, or with probability `flip_prob` a
/// neighbouring class (up or down equally likely, clamped to the scale).
pub fn simulate_raters(
    true_class: LikertClass,
    n_raters: usize,
    flip_prob: f64,
    seed: u64,
) -> Result<Vec<LikertClass>> {
    if n_raters == 0 {
        return Err(AlqaError::Parameter("need at least one rater".into()));
    }
    if !(0.0..=0.5).contains(&flip_prob) {
        return Err(AlqaError::Parameter(format!(
            "flip probability {flip_prob} outside [0, 0.5]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_raters)
        .map(|_| {
            if rng.random::<f64>() < flip_prob {
                true_class.shifted(if rng.random_bool(0.5) { 1 } else { -1 })
            } else {
                true_class
            }
        })
        .collect())
}
