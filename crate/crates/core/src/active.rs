//! Pool-based active learning: an initial random draw, uncertainty queries
//! built from the gap between the two most probable classes, and a random
//! sampling baseline on the same schedule.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_atomic, LikertClass, SplitKind, TestCaseDatabase, NUM_CLASSES};
use crate::error::{AlqaError, Result};
use crate::pipeline::{tune_classifier, ClassifierKind, ClassifierParams, DatasetFeatures, QualityModel, TuningGrid};

const STATE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    MeanMargin,
    MinMargin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Uncertainty,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActiveLearningConfig {
    pub n_initial: usize,
    pub query_size: usize,
    pub max_queries: usize,
    pub target_accuracy: f64,
    pub classifier: ClassifierKind,
    pub aggregation: Aggregation,
    pub seed: u64,
    /// PCA dimension; the classifier's default when unset.
    pub r: Option<usize>,
    /// Grid search at the first fit; otherwise default hyperparameters.
    pub tune: bool,
    pub grid: TuningGrid,
    /// Keep querying after the target is reached.
    pub continue_after_target: bool,
}

impl Default for ActiveLearningConfig {
    fn default() -> Self {
        Self {
            n_initial: 200,
            query_size: 40,
            max_queries: usize::MAX,
            target_accuracy: 0.90,
            classifier: ClassifierKind::Svm,
            aggregation: Aggregation::MeanMargin,
            seed: 0,
            r: None,
            tune: true,
            grid: TuningGrid::default(),
            continue_after_target: false,
        }
    }
}

impl ActiveLearningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_initial < NUM_CLASSES || self.query_size == 0 {
            return Err(AlqaError::Parameter(format!(
                "need n_initial >= {NUM_CLASSES} and query_size >= 1, got {} and {}",
                self.n_initial, self.query_size
            )));
        }
        if !(0.0..=1.0).contains(&self.target_accuracy) {
            return Err(AlqaError::Parameter(format!("target accuracy {} outside [0, 1]", self.target_accuracy)));
        }
        Ok(())
    }

    pub fn r(&self) -> usize {
        self.r.unwrap_or_else(|| self.classifier.default_r())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyScore {
    pub dataset_id: String,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub labeled: usize,
    pub accuracy: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
    pub reached_target_at: Option<usize>,
}

impl LearningCurve {
    /// (|L|, accuracy) pairs, without timestamps.
    pub fn pairs(&self) -> Vec<(usize, f64)> {
        self.points.iter().map(|p| (p.labeled, p.accuracy)).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(["labeled", "accuracy", "timestamp"]).map_err(csv_error)?;
        for p in &self.points {
            w.write_record([p.labeled.to_string(), p.accuracy.to_string(), p.timestamp.to_string()]).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> AlqaError {
    AlqaError::Io(std::io::Error::other(e))
}

/// P_b1 − P_b2 of one probability vector.
pub fn slice_margin(proba: &[f64]) -> Result<f64> {
    if proba.len() < 2 || proba.iter().any(|p| !p.is_finite() || *p < -1e-12) || (proba.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(AlqaError::Parameter(format!("malformed probability vector {proba:?}")));
    }
    let (mut b1, mut b2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &p in proba {
        if p > b1 {
            b2 = b1;
            b1 = p;
        } else if p > b2 {
            b2 = p;
        }
    }
    Ok((b1 - b2).clamp(0.0, 1.0))
}

pub fn aggregate_margin(margins: &[f64], aggregation: Aggregation) -> Result<f64> {
    if margins.is_empty() {
        return Err(AlqaError::Parameter("margin of a dataset without slices".into()));
    }
    Ok(match aggregation {
        Aggregation::MeanMargin => margins.iter().sum::<f64>() / margins.len() as f64,
        Aggregation::MinMargin => margins.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Aggregated margin of every pool dataset, ascending (ties by id).
pub fn rank_pool(pool: &BTreeSet<String>, model: &QualityModel, features: &DatasetFeatures, aggregation: Aggregation) -> Result<Vec<UncertaintyScore>> {
    let mut scores = Vec::with_capacity(pool.len());
    for id in pool {
        let margins = features
            .slices(id)?
            .iter()
            .map(|s| slice_margin(&model.slice_proba(s)?))
            .collect::<Result<Vec<_>>>()?;
        scores.push(UncertaintyScore {
            dataset_id: id.clone(),
            margin: aggregate_margin(&margins, aggregation)?,
        });
    }
    sort_scores(&mut scores);
    Ok(scores)
}

/// Ascending margin, ties by dataset id.
pub fn sort_scores(scores: &mut [UncertaintyScore]) {
    scores.sort_by(|a, b| a.margin.total_cmp(&b.margin).then_with(|| a.dataset_id.cmp(&b.dataset_id)));
}

/// The `q` most uncertain pool datasets, most uncertain first. An empty
/// pool gives an empty query set.
pub fn select_query_set(pool: &BTreeSet<String>, model: &QualityModel, features: &DatasetFeatures, q: usize, aggregation: Aggregation) -> Result<Vec<UncertaintyScore>> {
    if q == 0 {
        return Err(AlqaError::Parameter("query size must be at least 1".into()));
    }
    let mut ranked = rank_pool(pool, model, features, aggregation)?;
    ranked.truncate(q);
    Ok(ranked)
}

/// Source of Likert labels for a query set.
pub trait Labeler {
    /// Labels for `ids`, in the same order. May block until a rater is done.
    fn label(&mut self, ids: &[String]) -> Result<Vec<LikertClass>>;
}

/// Answers from the corpus reference labels.
pub struct OracleLabeler<'a> {
    pub reference: &'a BTreeMap<String, LikertClass>,
}

impl Labeler for OracleLabeler<'_> {
    fn label(&mut self, ids: &[String]) -> Result<Vec<LikertClass>> {
        ids.iter()
            .map(|id| self.reference.get(id).copied().ok_or_else(|| AlqaError::Labeler(format!("no reference label for {id}"))))
            .collect()
    }
}

/// Everything needed to continue a run after an interruption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopState {
    pub format_version: u32,
    pub config: ActiveLearningConfig,
    pub strategy: Strategy,
    /// Number of query sets built so far (the initial draw is not one).
    pub queries: usize,
    /// Labeled datasets in labeling order.
    pub labeled: Vec<(String, LikertClass)>,
    /// Datasets handed to the labeler and not yet answered.
    pub pending: Vec<String>,
    pub params: Option<ClassifierParams>,
    pub curve: LearningCurve,
    pub finished: bool,
}

impl LoopState {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &serde_json::to_vec_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(AlqaError::NotFound(path.to_path_buf()));
        }
        let state: Self = serde_json::from_slice(&fs::read(path)?).map_err(|e| AlqaError::Corrupt {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        if state.format_version != STATE_FORMAT_VERSION {
            return Err(AlqaError::VersionMismatch {
                expected: STATE_FORMAT_VERSION,
                found: state.format_version,
            });
        }
        Ok(state)
    }
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn sub_seed(seed: u64, step: u64) -> u64 {
    seed ^ step.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// `n` datasets drawn uniformly from the pool, reproducible from the seed.
fn random_draw(pool: &BTreeSet<String>, n: usize, seed: u64) -> Vec<String> {
    let mut ids: Vec<String> = pool.iter().cloned().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids.truncate(n);
    ids
}

/// Dataset-level accuracy on the test split against the reference labels.
pub fn test_accuracy(db: &TestCaseDatabase, model: &QualityModel, features: &DatasetFeatures) -> Result<f64> {
    if db.splits.test.is_empty() {
        return Err(AlqaError::Parameter("empty test split".into()));
    }
    let mut hits = 0;
    for id in &db.splits.test {
        let truth = db.reference.get(id).ok_or_else(|| AlqaError::Parameter(format!("no reference label for test dataset {id}")))?;
        if model.predict_dataset(features.slices(id)?)?.class == *truth {
            hits += 1;
        }
    }
    Ok(hits as f64 / db.splits.test.len() as f64)
}

fn check_query(db: &TestCaseDatabase, ids: &[String]) -> Result<()> {
    for id in ids {
        if db.splits.split_of(id) != Some(SplitKind::Train) || !db.unlabeled.contains(id) {
            return Err(AlqaError::Parameter(format!("query contains {id}, which is not in the unlabeled training pool")));
        }
    }
    Ok(())
}

/// Hooks for observing a run.
pub trait LoopObserver {
    fn on_point(&mut self, _point: &CurvePoint) {}
    /// Called after a model is fitted, before querying.
    fn on_model(&mut self, _model: &QualityModel) {}
    fn on_query(&mut self, _query: &[String]) {}
}

impl LoopObserver for () {}

/// Runs (or resumes, when `state_path` holds a state) the labeling loop.
/// The database pools are rebuilt from the state, so ℒ starts empty for a
/// fresh run. On labeler failure the state is persisted with the pending
/// query and the error returned.
pub fn run_loop(
    db: &mut TestCaseDatabase,
    features: &DatasetFeatures,
    cfg: &ActiveLearningConfig,
    strategy: Strategy,
    labeler: &mut dyn Labeler,
    state_path: Option<&Path>,
    observer: &mut dyn LoopObserver,
) -> Result<LearningCurve> {
    cfg.validate()?;
    let mut state = match state_path.filter(|p| p.exists()) {
        Some(path) => {
            let state = LoopState::load(path)?;
            if state.config != *cfg || state.strategy != strategy {
                return Err(AlqaError::Parameter(format!(
                    "state file {} was written by a different configuration",
                    path.display()
                )));
            }
            state
        }
        None => LoopState {
            format_version: STATE_FORMAT_VERSION,
            config: cfg.clone(),
            strategy,
            queries: 0,
            labeled: Vec::new(),
            pending: Vec::new(),
            params: None,
            curve: LearningCurve::default(),
            finished: false,
        },
    };

    db.set_splits(db.splits.clone());
    for (id, class) in &state.labeled {
        db.label(id, *class)?;
    }
    let pool_size = db.splits.train.len();
    let persist = |s: &LoopState| match state_path {
        Some(p) => s.save(p),
        None => Ok(()),
    };

    if state.labeled.is_empty() && state.pending.is_empty() && !state.finished {
        state.pending = random_draw(&db.unlabeled, cfg.n_initial, cfg.seed);
        persist(&state)?;
    }

    while !state.finished {
        if !state.pending.is_empty() {
            check_query(db, &state.pending)?;
            let labels = match labeler.label(&state.pending) {
                Ok(l) if l.len() == state.pending.len() => l,
                Ok(l) => {
                    persist(&state)?;
                    return Err(AlqaError::Labeler(format!("{} labels for {} datasets", l.len(), state.pending.len())));
                }
                Err(e) => {
                    persist(&state)?;
                    return Err(e);
                }
            };
            for (id, class) in std::mem::take(&mut state.pending).into_iter().zip(labels) {
                db.label(&id, class)?;
                state.labeled.push((id, class));
            }
            db.check_pools()?;
            if db.unlabeled.len() + db.labeled.len() != pool_size {
                return Err(AlqaError::Parameter("pool size changed during the run".into()));
            }
            persist(&state)?;
        }

        let (x, y) = features.training_set(db.labeled.iter())?;
        let params = match &state.params {
            Some(p) => p.clone(),
            None => {
                let p = if cfg.tune {
                    tune_classifier(cfg.classifier, &x, &y, cfg.r(), &cfg.grid, cfg.seed)?
                } else {
                    match ClassifierParams::default_for(cfg.classifier) {
                        ClassifierParams::Mlp { dropout, l2, epochs, .. } => ClassifierParams::Mlp { dropout, l2, epochs, seed: cfg.seed },
                        p => p,
                    }
                };
                state.params = Some(p.clone());
                p
            }
        };
        let validation = validation_set(db, features)?;
        let model = QualityModel::fit(&x, &y, cfg.r(), &params, validation.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice())))?;
        observer.on_model(&model);
        let accuracy = test_accuracy(db, &model, features)?;
        let point = CurvePoint {
            labeled: db.labeled.len(),
            accuracy,
            timestamp: now(),
        };
        log::info!("{strategy:?}: |L| = {}, accuracy {accuracy:.4}", point.labeled);
        observer.on_point(&point);
        state.curve.points.push(point);
        if accuracy >= cfg.target_accuracy && state.curve.reached_target_at.is_none() {
            state.curve.reached_target_at = Some(db.labeled.len());
        }

        let done = (state.curve.reached_target_at.is_some() && !cfg.continue_after_target)
            || state.queries >= cfg.max_queries
            || db.unlabeled.is_empty();
        if done {
            state.finished = true;
        } else {
            state.pending = match strategy {
                Strategy::Uncertainty => select_query_set(&db.unlabeled, &model, features, cfg.query_size, cfg.aggregation)?
                    .into_iter()
                    .map(|s| s.dataset_id)
                    .collect(),
                Strategy::Random => random_draw(&db.unlabeled, cfg.query_size, sub_seed(cfg.seed, state.queries as u64)),
            };
            check_query(db, &state.pending)?;
            observer.on_query(&state.pending);
            state.queries += 1;
        }
        persist(&state)?;
    }
    Ok(state.curve)
}

/// Validation-split slices with reference labels, used only for the
/// network's checkpoint.
fn validation_set(db: &TestCaseDatabase, features: &DatasetFeatures) -> Result<Option<(Vec<Vec<f64>>, Vec<LikertClass>)>> {
    let labeled: Vec<(&String, &LikertClass)> = db
        .splits
        .validation
        .iter()
        .filter_map(|id| db.reference.get(id).map(|c| (id, c)))
        .collect();
    if labeled.is_empty() {
        return Ok(None);
    }
    Ok(Some(features.training_set(labeled)?))
}

pub fn run_active_learning(
    db: &mut TestCaseDatabase,
    features: &DatasetFeatures,
    cfg: &ActiveLearningConfig,
    labeler: &mut dyn Labeler,
    state_path: Option<&Path>,
) -> Result<LearningCurve> {
    run_loop(db, features, cfg, Strategy::Uncertainty, labeler, state_path, &mut ())
}

pub fn run_random_baseline(
    db: &mut TestCaseDatabase,
    features: &DatasetFeatures,
    cfg: &ActiveLearningConfig,
    labeler: &mut dyn Labeler,
    state_path: Option<&Path>,
) -> Result<LearningCurve> {
    run_loop(db, features, cfg, Strategy::Random, labeler, state_path, &mut ())
}

/// Labels needed to reach the target, averaged over runs; runs that never
/// reach it count with the full pool size and are reported separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub runs: usize,
    pub reached: usize,
    pub mean_labels_to_target: f64,
    pub labels_to_target: Vec<Option<usize>>,
}

pub fn summarize(curves: &[LearningCurve], pool_size: usize) -> CurveSummary {
    let labels: Vec<Option<usize>> = curves.iter().map(|c| c.reached_target_at).collect();
    let mean = labels.iter().map(|l| l.unwrap_or(pool_size) as f64).sum::<f64>() / curves.len().max(1) as f64;
    CurveSummary {
        runs: curves.len(),
        reached: labels.iter().flatten().count(),
        mean_labels_to_target: mean,
        labels_to_target: labels,
    }
}

#[cfg(test)]
mod tests;
