//! Implementations behind the `alqa` subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use alqa::active::{run_loop, summarize, ActiveLearningConfig, OracleLabeler, Strategy};
use alqa::corpus::{generate_corpus, load_database, load_volume, save_database, split_database, CorpusConfig, SplitRatios};
use alqa::eval::{evaluate, EvaluationReport};
use alqa::features::{load_manifest, read_feature_csv, save_manifest, write_feature_csv, FeatureExtractor, FeatureManifest, FeatureTable};
use alqa::pipeline::{featurize_volume, featurize_volumes, tune_classifier, ClassifierKind, ClassifierParams, DatasetFeatures, QualityModel, TuningGrid};
use alqa::reduction::Reducer;
use alqa::segmentation::{chan_vese, MaskRle, SegmentationConfig};
use alqa::{AlqaError, LikertClass, Result, TestCaseDatabase, NUM_CLASSES};
use serde_json::json;

pub const FEATURES_FILE: &str = "features.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn features_path(db_dir: &Path, explicit: Option<&Path>) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| db_dir.join(FEATURES_FILE))
}

fn manifest_next_to(features: &Path) -> PathBuf {
    features.with_file_name(MANIFEST_FILE)
}

/// Reads a feature table and the manifest stored beside it (the default
/// manifest when there is none).
pub fn load_features(path: &Path) -> Result<FeatureTable> {
    let mpath = manifest_next_to(path);
    let manifest = if mpath.exists() { load_manifest(&mpath)? } else { FeatureManifest::default() };
    read_feature_csv(path, &manifest)
}

pub fn write_features(table: &FeatureTable, path: &Path) -> Result<()> {
    write_feature_csv(table, path)?;
    save_manifest(&table.manifest, &manifest_next_to(path))
}

pub fn corpus_generate(out: &Path, cfg: &CorpusConfig, ratios: SplitRatios, split_seed: u64) -> Result<TestCaseDatabase> {
    let mut db = generate_corpus(cfg)?;
    let splits = split_database(&db, ratios, split_seed)?;
    db.set_splits(splits);
    save_database(&db, out)?;
    fs::write(out.join("corpus.json"), serde_json::to_vec_pretty(cfg)?)?;
    Ok(db)
}

pub fn segment(db_dir: &Path, volume: &str, slice: Option<usize>, out: Option<&Path>) -> Result<()> {
    let v = load_volume(db_dir, volume)?;
    let cfg = SegmentationConfig::default();
    let slices: Vec<usize> = match slice {
        Some(z) if z < v.depth() => vec![z],
        Some(z) => return Err(AlqaError::Parameter(format!("{volume} has {} slices, not {}", v.depth(), z + 1))),
        None => (0..v.depth()).collect(),
    };
    let mut masks = Vec::new();
    for z in slices {
        let mask = chan_vese(&v.slice(z), &cfg)?;
        println!("slice {z}: area {} c1 {:.4} c2 {:.4}", mask.area(), mask.c1, mask.c2);
        masks.push(json!({ "slice": z, "c1": mask.c1, "c2": mask.c2, "mask": MaskRle::encode(&mask.pixels) }));
    }
    if let Some(out) = out {
        fs::write(out, serde_json::to_vec_pretty(&masks)?)?;
    }
    Ok(())
}

pub fn extract(db_dir: &Path, out: &Path) -> Result<FeatureTable> {
    let db = load_database(db_dir)?;
    let extractor = FeatureExtractor::new(FeatureManifest::default())?;
    let start = Instant::now();
    let table = featurize_volumes(db.volumes.values(), &SegmentationConfig::default(), &extractor, |i, n| {
        if i % 50 == 0 || i == n {
            log::info!("{i}/{n} volumes, {:.0}s", start.elapsed().as_secs_f64());
        }
    })?;
    write_features(&table, out)?;
    Ok(table)
}

/// Raw slice rows and reference labels of one split.
pub fn split_rows(db: &TestCaseDatabase, features: &DatasetFeatures, ids: &std::collections::BTreeSet<String>) -> Result<(Vec<Vec<f64>>, Vec<LikertClass>)> {
    let labeled: Vec<(&String, &LikertClass)> = ids
        .iter()
        .map(|id| db.reference.get(id).map(|c| (id, c)).ok_or_else(|| AlqaError::Parameter(format!("no reference label for {id}"))))
        .collect::<Result<_>>()?;
    features.training_set(labeled)
}

pub fn reduce(db_dir: &Path, features: &Path, r: usize, out: &Path) -> Result<Reducer> {
    let db = load_database(db_dir)?;
    let feats = DatasetFeatures::from_table(&load_features(features)?);
    let (x, _) = split_rows(&db, &feats, &db.splits.train)?;
    let reducer = Reducer::fit(&x, r)?;
    reducer.save(out)?;
    let kept: f64 = reducer.pca.explained_variance_ratio.iter().sum();
    println!("R = {r}, explained variance {kept:.4}, checksum {}", reducer.pca.checksum());
    Ok(reducer)
}

pub struct TrainOptions {
    pub kind: ClassifierKind,
    pub r: Option<usize>,
    pub tune: bool,
    pub full_grid: bool,
    pub params: Option<ClassifierParams>,
    pub seed: u64,
}

/// Fits the full pipeline on the train split with reference labels.
pub fn train(db: &TestCaseDatabase, feats: &DatasetFeatures, opts: &TrainOptions) -> Result<QualityModel> {
    let r = opts.r.unwrap_or_else(|| opts.kind.default_r());
    let (x, y) = split_rows(db, feats, &db.splits.train)?;
    let params = match (&opts.params, opts.tune) {
        (Some(p), _) => p.clone(),
        (None, true) => {
            let grid = if opts.full_grid { TuningGrid::full() } else { TuningGrid::default() };
            tune_classifier(opts.kind, &x, &y, r, &grid, opts.seed)?
        }
        (None, false) => match ClassifierParams::default_for(opts.kind) {
            ClassifierParams::Mlp { dropout, l2, epochs, .. } => ClassifierParams::Mlp { dropout, l2, epochs, seed: opts.seed },
            p => p,
        },
    };
    let validation = split_rows(db, feats, &db.splits.validation).ok().filter(|(vx, _)| !vx.is_empty());
    QualityModel::fit(&x, &y, r, &params, validation.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice())))
}

/// Dataset-level evaluation on the test split; ROC scores are the mean slice
/// probabilities.
pub fn evaluate_model(db: &TestCaseDatabase, feats: &DatasetFeatures, model: &QualityModel) -> Result<EvaluationReport> {
    let mut predicted = Vec::new();
    let mut truth = Vec::new();
    let mut scores = Vec::new();
    for id in &db.splits.test {
        let p = model.predict_dataset(feats.slices(id)?)?;
        predicted.push(p.class);
        scores.push(p.mean_proba);
        truth.push(*db.reference.get(id).ok_or_else(|| AlqaError::Parameter(format!("no reference label for {id}")))?);
    }
    evaluate(&predicted, &truth, &scores, NUM_CLASSES)
}

pub fn print_report(report: &EvaluationReport) {
    println!("test datasets {}", report.n_test);
    println!("accuracy {:.4}", report.accuracy);
    if let Some(auc) = report.mean_auc {
        println!("mean one-vs-rest AUC {auc:.4}");
    }
    println!("confusion (rows true 1..5, columns predicted 1..5)");
    for row in &report.confusion.counts {
        println!("  {}", row.iter().map(|c| format!("{c:5}")).collect::<String>());
    }
}

/// `--volume` names a stored volume by either of its files; the database
/// root is two levels up.
pub fn resolve_volume(path: &Path) -> Result<(PathBuf, String)> {
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| AlqaError::Parameter(format!("cannot read a volume id from {}", path.display())))?;
    let root = path
        .parent()
        .and_then(Path::parent)
        .ok_or_else(|| AlqaError::Parameter(format!("{} is not inside a database", path.display())))?;
    Ok((root.to_path_buf(), id.to_string()))
}

pub fn predict(model_dir: &Path, volume: &Path) -> Result<serde_json::Value> {
    let model = QualityModel::load(model_dir)?;
    let mpath = model_dir.join(MANIFEST_FILE);
    let manifest = if mpath.exists() { load_manifest(&mpath)? } else { FeatureManifest::default() };
    let (root, id) = resolve_volume(volume)?;
    let v = load_volume(&root, &id)?;
    let rows: Vec<Vec<f64>> = featurize_volume(&v, &SegmentationConfig::default(), &FeatureExtractor::new(manifest)?)?
        .into_iter()
        .map(|f| f.values)
        .collect();
    let p = model.predict_dataset(&rows)?;
    Ok(json!({
        "dataset_id": id,
        "class": p.class,
        "probabilities": p.mean_proba,
        "slice_classes": p.slice_classes,
    }))
}

pub fn save_model(model: &QualityModel, manifest: &FeatureManifest, dir: &Path) -> Result<()> {
    model.save(dir)?;
    save_manifest(manifest, &dir.join(MANIFEST_FILE))
}

/// Oracle-labeled runs of both strategies for each seed. Curves go to
/// `out/<strategy>_seed<k>.csv`; loop states make interrupted runs resumable.
pub fn al_oracle(db: &mut TestCaseDatabase, feats: &DatasetFeatures, base: &ActiveLearningConfig, seeds: u64, out: &Path) -> Result<serde_json::Value> {
    fs::create_dir_all(out)?;
    let reference = db.reference.clone();
    let mut curves: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for seed in 0..seeds {
        for (name, strategy) in [("uncertainty", Strategy::Uncertainty), ("random", Strategy::Random)] {
            let cfg = ActiveLearningConfig { seed, ..base.clone() };
            let state = out.join(format!("{name}_seed{seed}.state.json"));
            let curve = run_loop(db, feats, &cfg, strategy, &mut OracleLabeler { reference: &reference }, Some(&state), &mut ())?;
            curve.write_csv(&out.join(format!("{name}_seed{seed}.csv")))?;
            println!("{name} seed {seed}: target reached at {:?}", curve.reached_target_at);
            curves.entry(name).or_default().push(curve);
        }
    }
    let pool = db.splits.train.len();
    let u = summarize(&curves["uncertainty"], pool);
    let r = summarize(&curves["random"], pool);
    let reduction = 1.0 - u.mean_labels_to_target / r.mean_labels_to_target;
    let summary = json!({
        "config": base,
        "pool_size": pool,
        "uncertainty": u,
        "random": r,
        "label_reduction": reduction,
    });
    fs::write(out.join("summary.json"), serde_json::to_vec_pretty(&summary)?)?;
    Ok(summary)
}
