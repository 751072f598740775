use std::cell::Cell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::corpus::Splits;

/// Pool of `n` datasets with three 4-d slices each around a class centre;
/// every seventh dataset sits almost halfway to the class below.
fn toy(n: usize, seed: u64) -> (TestCaseDatabase, DatasetFeatures) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut db = TestCaseDatabase::new();
    let mut features = DatasetFeatures::default();
    let mut splits = Splits::default();
    for i in 0..n {
        let id = format!("d{i:03}");
        let class = i % NUM_CLASSES;
        let centre = if i % 7 == 3 && class > 0 { class as f64 - 0.45 } else { class as f64 };
        let slices = (0..3)
            .map(|_| (0..4).map(|j| if j == 0 { 2.0 * centre } else { 0.0 } + 0.25 * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        features.by_dataset.insert(id.clone(), slices);
        db.reference.insert(id.clone(), LikertClass::from_index(class).unwrap());
        match i % 10 {
            0..=5 => splits.train.insert(id),
            6 => splits.validation.insert(id),
            _ => splits.test.insert(id),
        };
    }
    db.set_splits(splits);
    (db, features)
}

fn config(seed: u64) -> ActiveLearningConfig {
    ActiveLearningConfig {
        n_initial: 20,
        query_size: 7,
        max_queries: 4,
        target_accuracy: 1.0,
        classifier: ClassifierKind::Svm,
        seed,
        tune: false,
        continue_after_target: true,
        ..ActiveLearningConfig::default()
    }
}

/// Checks pool invariants on every query.
struct Watch<'a> {
    db_train: &'a BTreeSet<String>,
    seen: BTreeSet<String>,
    queries: Vec<Vec<String>>,
}

impl LoopObserver for Watch<'_> {
    fn on_query(&mut self, query: &[String]) {
        for id in query {
            assert!(self.db_train.contains(id), "{id} is not a training dataset");
            assert!(self.seen.insert(id.clone()), "{id} queried twice");
        }
        self.queries.push(query.to_vec());
    }
}

#[test]
fn margin_examples() {
    assert!((slice_margin(&[0.6, 0.3, 0.1, 0.0, 0.0]).unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(slice_margin(&[0.2; 5]).unwrap(), 0.0);
    assert_eq!(slice_margin(&[0.0, 0.0, 1.0, 0.0, 0.0]).unwrap(), 1.0);
    assert!(slice_margin(&[0.5, 0.2]).is_err());
    assert!(slice_margin(&[f64::NAN, 1.0]).is_err());
    assert!(slice_margin(&[1.0]).is_err());
}

#[test]
fn aggregation_modes() {
    let m = [0.2, 0.6, 0.1];
    assert!((aggregate_margin(&m, Aggregation::MeanMargin).unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(aggregate_margin(&m, Aggregation::MinMargin).unwrap(), 0.1);
    assert!(aggregate_margin(&[], Aggregation::MeanMargin).is_err());
}

#[test]
fn score_order_and_ties() {
    let mk = |id: &str, margin| UncertaintyScore {
        dataset_id: id.into(),
        margin,
    };
    let mut s = vec![mk("b", 0.5), mk("c", 0.9), mk("a", 0.1)];
    sort_scores(&mut s);
    assert_eq!(s[0].dataset_id, "a");
    let mut tied = vec![mk("z", 0.4), mk("m", 0.4), mk("a", 0.4), mk("q", 0.4)];
    sort_scores(&mut tied);
    let ids: Vec<&str> = tied.iter().map(|s| s.dataset_id.as_str()).collect();
    assert_eq!(ids, ["a", "m", "q", "z"]);
}

#[test]
fn query_selection_on_a_fitted_model() {
    let (db, features) = toy(100, 1);
    let labeled: Vec<(String, LikertClass)> = db.splits.train.iter().take(30).map(|id| (id.clone(), db.reference[id])).collect();
    let (x, y) = features.training_set(labeled.iter().map(|(a, b)| (a, b))).unwrap();
    let model = QualityModel::fit(&x, &y, 3, &ClassifierParams::Svm { c: 4.0, gamma: 0.5 }, None).unwrap();
    let pool: BTreeSet<String> = db.splits.train.iter().skip(30).cloned().collect();
    let all = rank_pool(&pool, &model, &features, Aggregation::MeanMargin).unwrap();
    assert_eq!(all.len(), pool.len());
    assert!(all.windows(2).all(|w| w[0].margin <= w[1].margin));
    assert!(all.iter().all(|s| (0.0..=1.0).contains(&s.margin)));
    let q = select_query_set(&pool, &model, &features, 5, Aggregation::MeanMargin).unwrap();
    assert_eq!(q, all[..5]);
    let small: BTreeSet<String> = pool.iter().take(4).cloned().collect();
    assert_eq!(select_query_set(&small, &model, &features, 10, Aggregation::MinMargin).unwrap().len(), 4);
    assert!(select_query_set(&BTreeSet::new(), &model, &features, 3, Aggregation::MeanMargin).unwrap().is_empty());
    // boundary cases are less certain on average
    let is_boundary = |id: &str| {
        let i = id[1..].parse::<usize>().unwrap();
        i % 7 == 3 && i % NUM_CLASSES > 0
    };
    let mean = |flag: bool| {
        let m: Vec<f64> = all.iter().filter(|s| is_boundary(&s.dataset_id) == flag).map(|s| s.margin).collect();
        m.iter().sum::<f64>() / m.len() as f64
    };
    assert!(mean(true) < mean(false), "{} vs {}", mean(true), mean(false));
}

#[test]
fn loop_schedule_and_pool_invariants() {
    let (mut db, features) = toy(200, 2);
    let reference = db.reference.clone();
    let train = db.splits.train.clone();
    for strategy in [Strategy::Uncertainty, Strategy::Random] {
        let cfg = config(5);
        let mut watch = Watch {
            db_train: &train,
            seen: BTreeSet::new(),
            queries: Vec::new(),
        };
        let mut labeler = OracleLabeler { reference: &reference };
        let curve = run_loop(&mut db, &features, &cfg, strategy, &mut labeler, None, &mut watch).unwrap();
        let sizes: Vec<usize> = curve.points.iter().map(|p| p.labeled).collect();
        assert_eq!(sizes, [20, 27, 34, 41, 48]);
        assert_eq!(watch.queries.len(), 4);
        assert_eq!(db.labeled.len(), 48);
        db.check_pools().unwrap();
        assert!(db.labeled.keys().all(|id| train.contains(id)));
    }
}

#[test]
fn random_baseline_is_deterministic() {
    let (mut db, features) = toy(150, 3);
    let reference = db.reference.clone();
    let cfg = config(11);
    let a = run_random_baseline(&mut db, &features, &cfg, &mut OracleLabeler { reference: &reference }, None).unwrap();
    let b = run_random_baseline(&mut db, &features, &cfg, &mut OracleLabeler { reference: &reference }, None).unwrap();
    assert_eq!(a.pairs(), b.pairs());
}

#[test]
fn exhausted_pool_terminates() {
    let (mut db, features) = toy(60, 4);
    let reference = db.reference.clone();
    let cfg = ActiveLearningConfig {
        max_queries: usize::MAX,
        ..config(1)
    };
    let curve = run_active_learning(&mut db, &features, &cfg, &mut OracleLabeler { reference: &reference }, None).unwrap();
    assert!(db.unlabeled.is_empty());
    assert_eq!(curve.points.last().unwrap().labeled, db.splits.train.len());
}

#[test]
fn target_stops_the_loop() {
    let (mut db, features) = toy(200, 6);
    let reference = db.reference.clone();
    let cfg = ActiveLearningConfig {
        target_accuracy: 0.5,
        continue_after_target: false,
        ..config(1)
    };
    let curve = run_active_learning(&mut db, &features, &cfg, &mut OracleLabeler { reference: &reference }, None).unwrap();
    assert_eq!(curve.reached_target_at, Some(curve.points.last().unwrap().labeled));
}

struct Flaky<'a> {
    inner: OracleLabeler<'a>,
    fail_on_call: usize,
    calls: Cell<usize>,
    labeled: Vec<String>,
}

impl Labeler for Flaky<'_> {
    fn label(&mut self, ids: &[String]) -> Result<Vec<LikertClass>> {
        let n = self.calls.get();
        self.calls.set(n + 1);
        if n == self.fail_on_call {
            return Err(AlqaError::Labeler("rater went away".into()));
        }
        self.labeled.extend(ids.iter().cloned());
        self.inner.label(ids)
    }
}

#[test]
fn resume_continues_without_relabeling() {
    let (mut db, features) = toy(200, 7);
    let reference = db.reference.clone();
    let cfg = config(9);
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");

    let straight = run_active_learning(&mut db, &features, &cfg, &mut OracleLabeler { reference: &reference }, None).unwrap();

    let mut flaky = Flaky {
        inner: OracleLabeler { reference: &reference },
        fail_on_call: 2,
        calls: Cell::new(0),
        labeled: Vec::new(),
    };
    let err = run_active_learning(&mut db, &features, &cfg, &mut flaky, Some(&state)).unwrap_err();
    assert!(matches!(err, AlqaError::Labeler(_)));
    let saved = LoopState::load(&state).unwrap();
    assert_eq!(saved.pending.len(), cfg.query_size);
    assert_eq!(saved.labeled.len(), 27);

    flaky.fail_on_call = usize::MAX;
    let resumed = run_active_learning(&mut db, &features, &cfg, &mut flaky, Some(&state)).unwrap();
    assert_eq!(resumed.pairs(), straight.pairs());
    let unique: BTreeSet<&String> = flaky.labeled.iter().collect();
    assert_eq!(unique.len(), flaky.labeled.len());
    assert_eq!(flaky.labeled.len(), 48);

    // a finished state resumes to the same curve without labeling
    let again = run_active_learning(&mut db, &features, &cfg, &mut flaky, Some(&state)).unwrap();
    assert_eq!(again, resumed);
    assert_eq!(flaky.labeled.len(), 48);

    let other = ActiveLearningConfig { seed: 10, ..cfg };
    assert!(run_active_learning(&mut db, &features, &other, &mut flaky, Some(&state)).is_err());
}

#[test]
fn mlp_loop_completes() {
    let (mut db, features) = toy(120, 8);
    let reference = db.reference.clone();
    let mut cfg = config(2);
    cfg.classifier = ClassifierKind::Mlp;
    cfg.r = Some(3);
    cfg.max_queries = 1;
    let mut cfg_params = cfg.clone();
    cfg_params.tune = false;
    let curve = run_active_learning(&mut db, &features, &cfg_params, &mut OracleLabeler { reference: &reference }, None).unwrap();
    assert_eq!(curve.points.len(), 2);
}

#[test]
fn config_validation() {
    assert!(ActiveLearningConfig { n_initial: 4, ..config(0) }.validate().is_err());
    assert!(ActiveLearningConfig { query_size: 0, ..config(0) }.validate().is_err());
    assert!(ActiveLearningConfig::default().validate().is_ok());
    let (mut db, features) = toy(60, 1);
    let reference = db.reference.clone();
    let mut bad = OracleLabeler { reference: &reference };
    assert!(run_active_learning(&mut db, &features, &ActiveLearningConfig { query_size: 0, ..config(0) }, &mut bad, None).is_err());
}

#[test]
fn summary_counts_unreached_runs_at_pool_size() {
    let reached = LearningCurve {
        points: Vec::new(),
        reached_target_at: Some(240),
    };
    let s = summarize(&[reached, LearningCurve::default()], 1000);
    assert_eq!(s.reached, 1);
    assert_eq!(s.mean_labels_to_target, 620.0);
}

#[test]
fn curve_csv_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let curve = LearningCurve {
        points: vec![CurvePoint {
            labeled: 200,
            accuracy: 0.5,
            timestamp: 1.0,
        }],
        reached_target_at: None,
    };
    curve.write_csv(&path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "labeled,accuracy,timestamp");
    assert_eq!(text.lines().count(), 2);
}
