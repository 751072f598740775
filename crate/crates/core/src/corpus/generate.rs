use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    generate_phantom, oracle_label, simulate_raters, ArtifactKind, ArtifactSpec, OracleConfig,
    PhantomSpec, TestCaseDatabase, NUM_CLASSES,
};
use crate::error::{AlqaError, Result};
use crate::eval::median_class;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub count: usize,
    /// (depth, height, width) of every volume.
    pub shape: (usize, usize, usize),
    /// Inclusive range of volumes generated per patient.
    pub volumes_per_patient: (usize, usize),
    /// Half-width of the uniform severity spread around each class center.
    pub severity_jitter: f64,
    pub noise_sigma_max: f64,
    pub n_raters: usize,
    pub flip_prob: f64,
    pub oracle: OracleConfig,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            count: 600,
            shape: (5, 80, 80),
            volumes_per_patient: (1, 3),
            severity_jitter: 0.05,
            noise_sigma_max: 0.02,
            n_raters: 5,
            flip_prob: 0.1,
            oracle: OracleConfig::default(),
            seed: 0,
        }
    }
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(b.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Builds an unsplit database of phantom volumes. Each volume draws a
/// target quality band, an artifact kind and a severity inside that band;
/// its reference label is the lower median of simulated raters around the
/// oracle class.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<TestCaseDatabase> {
    let (lo, hi) = cfg.volumes_per_patient;
    if lo == 0 || hi < lo {
        return Err(AlqaError::Parameter(format!(
            "volumes_per_patient {:?} must satisfy 1 <= lo <= hi",
            cfg.volumes_per_patient
        )));
    }
    if !(0.0..=0.1).contains(&cfg.severity_jitter) {
        return Err(AlqaError::Parameter(format!(
            "severity jitter {} outside [0, 0.1]",
            cfg.severity_jitter
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let band = 1.0 / NUM_CLASSES as f64;

    let mut plan = Vec::with_capacity(cfg.count);
    let mut patient = 0u64;
    while plan.len() < cfg.count {
        let n = rng.random_range(lo..=hi).min(cfg.count - plan.len());
        let body = PhantomSpec::sample_body(mix(cfg.seed, 1, patient));
        for _ in 0..n {
            let target = rng.random_range(0..NUM_CLASSES);
            let severity = ((target as f64 + 0.5) * band
                + rng.random_range(-cfg.severity_jitter..=cfg.severity_jitter))
            .clamp(0.0, 1.0);
            let kind = match rng.random_range(0..3) {
                0 => ArtifactKind::MotionGhost {
                    phase_amplitude: 2.0 * std::f64::consts::FRAC_PI_3,
                },
                1 => ArtifactKind::AliasSubsample { factor: 4 },
                _ => ArtifactKind::Blur { width: 2.5 },
            };
            let noise_sigma = rng.random_range(0.0..=cfg.noise_sigma_max);
            plan.push((patient, body.clone(), ArtifactSpec { kind, severity }, noise_sigma));
        }
        patient += 1;
    }

    let mut db = TestCaseDatabase::new();
    for (i, (patient, body, artifact, noise_sigma)) in plan.into_iter().enumerate() {
        let spec = PhantomSpec {
            shape: cfg.shape,
            body,
            artifact,
            noise_sigma,
            seed: mix(cfg.seed, 2, i as u64),
        };
        let id = format!("v{i:05}");
        let volume = generate_phantom(&id, &format!("p{patient:04}"), &spec)?;
        let truth = oracle_label(&spec.artifact, spec.noise_sigma, &cfg.oracle);
        let votes = simulate_raters(truth, cfg.n_raters, cfg.flip_prob, mix(cfg.seed, 3, i as u64))?;
        db.reference.insert(id, median_class(&votes)?);
        db.insert(volume)?;
    }
    Ok(db)
}
