#![allow(dead_code)]

use std::path::Path;
use std::time::{Duration, Instant};

use alqa::active::ActiveLearningConfig;
use alqa::corpus::{CorpusConfig, SplitRatios};
use alqa::features::{FeatureManifest, FeatureTable, FeatureVector, SliceRef};
use alqa::pipeline::ClassifierKind;
use alqa::TestCaseDatabase;
use alqa_server::commands;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

pub const TOKEN: &str = "test-token";

/// Small stored corpus with features that carry the reference class, so
/// the loop can fit quickly without running the extractors.
pub fn tiny_database(dir: &Path, count: usize) -> TestCaseDatabase {
    let cfg = CorpusConfig {
        count,
        shape: (2, 24, 24),
        seed: 5,
        ..CorpusConfig::default()
    };
    let db = commands::corpus_generate(dir, &cfg, SplitRatios::default(), 5).unwrap();
    let manifest = FeatureManifest::default();
    let hash = manifest.checksum();
    let mut table = FeatureTable::new(manifest.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for v in db.volumes.values() {
        let class = db.reference[&v.id].value() as f64;
        for z in 0..v.depth() {
            let values = (0..manifest.len())
                .map(|k| if k < 8 { class + 0.3 * rng.random::<f64>() } else { rng.random::<f64>() })
                .collect();
            table
                .push(FeatureVector {
                    values,
                    manifest_hash: hash.clone(),
                    source: SliceRef { volume_id: v.id.clone(), slice_index: z },
                    degeneracies: 0,
                })
                .unwrap();
        }
    }
    commands::write_features(&table, &dir.join(commands::FEATURES_FILE)).unwrap();
    db
}

pub fn small_config() -> ActiveLearningConfig {
    ActiveLearningConfig {
        n_initial: 8,
        query_size: 4,
        max_queries: 2,
        target_accuracy: 1.0,
        continue_after_target: true,
        classifier: ClassifierKind::Svm,
        tune: false,
        ..ActiveLearningConfig::default()
    }
}

/// The simulated rater's score: a fixed function of the id, independent of
/// the reference labels.
pub fn human_score(id: &str) -> i64 {
    id.bytes().map(i64::from).sum::<i64>() % 5 + 1
}

pub struct Client {
    pub base: String,
    pub token: String,
    agent: ureq::Agent,
}

impl Client {
    pub fn new(base: &str, token: &str) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Self { base: base.to_string(), token: token.to_string(), agent }
    }

    pub fn get_raw(&self, path: &str) -> (u16, Vec<u8>) {
        let mut r = self
            .agent
            .get(format!("{}{path}", self.base))
            .header("Authorization", format!("Bearer {}", self.token))
            .call()
            .unwrap();
        (r.status().as_u16(), r.body_mut().read_to_vec().unwrap())
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        let (status, body) = self.get_raw(path);
        (status, serde_json::from_slice(&body).unwrap_or(Value::Null))
    }

    pub fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        let mut r = self
            .agent
            .post(format!("{}{path}", self.base))
            .header("Authorization", format!("Bearer {}", self.token))
            .send_json(body)
            .unwrap();
        let status = r.status().as_u16();
        (status, serde_json::from_slice(&r.body_mut().read_to_vec().unwrap()).unwrap_or(Value::Null))
    }

    pub fn label(&self, id: &str, class: i64) -> (u16, Value) {
        self.post("/api/label", &serde_json::json!({ "dataset_id": id, "class": class }))
    }

    /// Polls /api/query until an item is served or the run ends (409).
    pub fn next_item(&self, timeout: Duration) -> Option<Value> {
        let start = Instant::now();
        loop {
            let (status, body) = self.get("/api/query");
            match (status, body["status"].as_str()) {
                (200, Some("item")) => return Some(body["item"].clone()),
                (200, Some("waiting")) => {}
                (409, _) => return None,
                other => panic!("unexpected /api/query response {other:?} {body}"),
            }
            assert!(start.elapsed() < timeout, "no query item within {timeout:?}");
            std::thread::sleep(Duration::from_millis(50));
        }
    }
}
