//! Glue from volumes to dataset-level predictions: per-slice segmentation
//! and features, standardization + PCA, a slice classifier, and the vote
//! that turns slice predictions into one label per dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ImageVolume, LikertClass, NUM_CLASSES};
use crate::error::{AlqaError, Result};
use crate::features::{FeatureExtractor, FeatureTable, FeatureVector, SliceRef};
use crate::mlp::{cv_tune_mlp, init_model, train_adam, MlpConfig, MlpData, MlpModel};
use crate::reduction::Reducer;
use crate::segmentation::{chan_vese, SegmentationConfig};
use crate::svm::{grid_search_cv, train_ovo, OvoSvmModel, SvmConfig};

/// Segments every slice of a volume and extracts its feature vector.
pub fn featurize_volume(volume: &ImageVolume, seg: &SegmentationConfig, extractor: &FeatureExtractor) -> Result<Vec<FeatureVector>> {
    (0..volume.depth())
        .map(|z| {
            let slice = volume.slice(z);
            let mask = chan_vese(&slice, seg)?;
            extractor.extract(
                &slice,
                &mask.pixels,
                SliceRef {
                    volume_id: volume.id.clone(),
                    slice_index: z,
                },
            )
        })
        .collect()
}

/// Feature table over many volumes; `progress` gets (done, total).
pub fn featurize_volumes<'a>(
    volumes: impl ExactSizeIterator<Item = &'a ImageVolume>,
    seg: &SegmentationConfig,
    extractor: &FeatureExtractor,
    mut progress: impl FnMut(usize, usize),
) -> Result<FeatureTable> {
    let total = volumes.len();
    let mut table = FeatureTable::new(extractor.manifest().clone());
    for (i, v) in volumes.enumerate() {
        for row in featurize_volume(v, seg, extractor)? {
            table.push(row)?;
        }
        progress(i + 1, total);
    }
    Ok(table)
}

/// Slice feature rows grouped by dataset id, in slice order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetFeatures {
    pub by_dataset: BTreeMap<String, Vec<Vec<f64>>>,
}

impl DatasetFeatures {
    pub fn from_table(table: &FeatureTable) -> Self {
        let mut rows: Vec<&FeatureVector> = table.rows.iter().collect();
        rows.sort_by(|a, b| (&a.source.volume_id, a.source.slice_index).cmp(&(&b.source.volume_id, b.source.slice_index)));
        let mut by_dataset: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        for r in rows {
            by_dataset.entry(r.source.volume_id.clone()).or_default().push(r.values.clone());
        }
        Self { by_dataset }
    }

    pub fn slices(&self, id: &str) -> Result<&[Vec<f64>]> {
        self.by_dataset
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| AlqaError::Parameter(format!("no features for dataset {id}")))
    }

    /// Slice rows of the given datasets with each dataset's label broadcast
    /// to its slices.
    pub fn training_set<'a>(&self, labeled: impl IntoIterator<Item = (&'a String, &'a LikertClass)>) -> Result<(Vec<Vec<f64>>, Vec<LikertClass>)> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (id, &class) in labeled {
            for row in self.slices(id)? {
                x.push(row.clone());
                y.push(class);
            }
        }
        Ok((x, y))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    Mlp,
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Svm => "svm",
            Self::Mlp => "mlp",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = AlqaError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svm" => Ok(Self::Svm),
            "mlp" => Ok(Self::Mlp),
            _ => Err(AlqaError::Parameter(format!("unknown classifier {s:?} (svm or mlp)"))),
        }
    }
}

impl ClassifierKind {
    pub fn default_r(self) -> usize {
        match self {
            Self::Svm => crate::reduction::DEFAULT_R_SVM,
            Self::Mlp => crate::reduction::DEFAULT_R_MLP,
        }
    }
}

/// Hyperparameters of a slice classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierParams {
    Svm { c: f64, gamma: f64 },
    Mlp { dropout: f64, l2: f64, epochs: usize, seed: u64 },
}

impl ClassifierParams {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Self::Svm { .. } => ClassifierKind::Svm,
            Self::Mlp { .. } => ClassifierKind::Mlp,
        }
    }

    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Svm => Self::Svm { c: 8.0, gamma: 1.0 / 128.0 },
            ClassifierKind::Mlp => Self::Mlp {
                dropout: 0.3,
                l2: 1e-4,
                epochs: 300,
                seed: 0,
            },
        }
    }

    fn mlp_config(r: usize, dropout: f64, l2: f64, epochs: usize, seed: u64) -> MlpConfig {
        let mut cfg = MlpConfig::with_input(r);
        cfg.set_dropout(dropout);
        cfg.l2 = l2;
        cfg.epochs = epochs;
        cfg.seed = seed;
        cfg
    }
}

/// Search grids used by [`tune_classifier`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningGrid {
    pub svm_c: Vec<f64>,
    pub svm_gamma: Vec<f64>,
    pub mlp_dropout: Vec<f64>,
    pub mlp_l2: Vec<f64>,
    /// Epochs per MLP training inside cross-validation.
    pub mlp_cv_epochs: usize,
    pub folds: usize,
    /// Cross-validation runs on a seeded subsample of at most this many
    /// slice rows.
    pub max_rows: usize,
}

impl Default for TuningGrid {
    fn default() -> Self {
        Self {
            svm_c: crate::svm::desk_c_grid(),
            svm_gamma: crate::svm::desk_gamma_grid(),
            mlp_dropout: crate::mlp::desk_dropout_grid(),
            mlp_l2: vec![1e-5, 1e-4, 1e-3],
            mlp_cv_epochs: 60,
            folds: 5,
            max_rows: 1500,
        }
    }
}

impl TuningGrid {
    /// The complete grids, with 10 folds.
    pub fn full() -> Self {
        Self {
            svm_c: crate::svm::default_c_grid(),
            svm_gamma: crate::svm::default_gamma_grid(),
            mlp_dropout: crate::mlp::full_dropout_grid(),
            mlp_l2: crate::mlp::full_l2_grid(),
            mlp_cv_epochs: 300,
            folds: 10,
            max_rows: usize::MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Classifier {
    Svm(OvoSvmModel),
    Mlp(MlpModel),
}

impl Classifier {
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Svm(m) => Ok(m.predict_proba(x)),
            Self::Mlp(m) => m.predict_proba(x),
        }
    }

    pub fn predict_class(&self, x: &[f64]) -> Result<LikertClass> {
        match self {
            Self::Svm(m) => Ok(m.predict_class(x)),
            Self::Mlp(m) => m.predict_class(x),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Self::Svm(_) => ClassifierKind::Svm,
            Self::Mlp(_) => ClassifierKind::Mlp,
        }
    }
}

/// Most frequent class; ties go to the more severe (higher) class.
pub fn majority_vote(classes: &[LikertClass]) -> Result<LikertClass> {
    if classes.is_empty() {
        return Err(AlqaError::Parameter("majority vote over no slices".into()));
    }
    let mut counts = [0usize; NUM_CLASSES];
    for c in classes {
        counts[c.index()] += 1;
    }
    let best = (0..NUM_CLASSES).rev().max_by_key(|&i| (counts[i], i)).expect("non-empty");
    LikertClass::from_index(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetPrediction {
    pub class: LikertClass,
    pub slice_classes: Vec<LikertClass>,
    pub slice_proba: Vec<Vec<f64>>,
    /// Mean of the slice probability vectors.
    pub mean_proba: Vec<f64>,
}

/// Reducer plus slice classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityModel {
    pub reducer: Reducer,
    pub classifier: Classifier,
    pub params: ClassifierParams,
}

impl QualityModel {
    /// Fits standardizer, PCA and classifier on raw slice features. MLP
    /// training uses `validation` (raw rows) for its checkpoint when given.
    pub fn fit(x: &[Vec<f64>], y: &[LikertClass], r: usize, params: &ClassifierParams, validation: Option<(&[Vec<f64>], &[LikertClass])>) -> Result<Self> {
        let reducer = Reducer::fit(x, r.min(x.len().saturating_sub(1)).max(1).min(x[0].len()))?;
        let z = reducer.transform_all(x)?;
        let classifier = match params {
            ClassifierParams::Svm { c, gamma } => {
                let classes: Vec<LikertClass> = y.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
                Classifier::Svm(train_ovo(&z, y, &classes, &SvmConfig::new(*c, *gamma))?)
            }
            &ClassifierParams::Mlp { dropout, l2, epochs, seed } => {
                let cfg = ClassifierParams::mlp_config(reducer.pca.r(), dropout, l2, epochs, seed);
                let data = MlpData::new(&z, y)?;
                let val = match validation {
                    Some((vx, vy)) => Some(MlpData::new(&reducer.transform_all(vx)?, vy)?),
                    None => None,
                };
                Classifier::Mlp(train_adam(init_model(&cfg)?, &data, val.as_ref(), &cfg)?)
            }
        };
        Ok(Self {
            reducer,
            classifier,
            params: params.clone(),
        })
    }

    pub fn slice_proba(&self, raw: &[f64]) -> Result<Vec<f64>> {
        self.classifier.predict_proba(&self.reducer.transform(raw)?)
    }

    pub fn predict_dataset(&self, slices: &[Vec<f64>]) -> Result<DatasetPrediction> {
        let mut slice_classes = Vec::with_capacity(slices.len());
        let mut slice_proba = Vec::with_capacity(slices.len());
        for s in slices {
            let z = self.reducer.transform(s)?;
            slice_classes.push(self.classifier.predict_class(&z)?);
            slice_proba.push(self.classifier.predict_proba(&z)?);
        }
        let class = majority_vote(&slice_classes)?;
        let mut mean_proba = vec![0.0; NUM_CLASSES];
        for p in &slice_proba {
            for (m, v) in mean_proba.iter_mut().zip(p) {
                *m += v / slice_proba.len() as f64;
            }
        }
        Ok(DatasetPrediction {
            class,
            slice_classes,
            slice_proba,
            mean_proba,
        })
    }

    /// Writes `reducer.bin`, `classifier.json` or `mlp.bin`, and
    /// `params.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.reducer.save(&dir.join("reducer.bin"))?;
        match &self.classifier {
            Classifier::Svm(m) => m.save(&dir.join("svm.json"))?,
            Classifier::Mlp(m) => m.save(&dir.join("mlp.bin"))?,
        }
        std::fs::write(dir.join("params.json"), serde_json::to_vec_pretty(&self.params)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let params_path = dir.join("params.json");
        if !params_path.exists() {
            return Err(AlqaError::NotFound(params_path));
        }
        let params: ClassifierParams = serde_json::from_slice(&std::fs::read(&params_path)?)?;
        let reducer = Reducer::load(&dir.join("reducer.bin"))?;
        let classifier = match params.kind() {
            ClassifierKind::Svm => Classifier::Svm(OvoSvmModel::load(&dir.join("svm.json"))?),
            ClassifierKind::Mlp => Classifier::Mlp(MlpModel::load(&dir.join("mlp.bin"))?),
        };
        Ok(Self { reducer, classifier, params })
    }
}

/// Cross-validated hyperparameters for `kind` on raw slice rows. The
/// reducer is fitted once on all rows before the search.
pub fn tune_classifier(kind: ClassifierKind, x: &[Vec<f64>], y: &[LikertClass], r: usize, grid: &TuningGrid, seed: u64) -> Result<ClassifierParams> {
    let reducer = Reducer::fit(x, r)?;
    let (z, y) = if x.len() > grid.max_rows {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        idx.truncate(grid.max_rows);
        idx.sort_unstable();
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
        (reducer.transform_all(&rows)?, idx.iter().map(|&i| y[i]).collect::<Vec<_>>())
    } else {
        (reducer.transform_all(x)?, y.to_vec())
    };
    let y = y.as_slice();
    match kind {
        ClassifierKind::Svm => {
            let g = grid_search_cv(&z, y, &grid.svm_c, &grid.svm_gamma, grid.folds, seed, &SvmConfig::new(1.0, 1.0))?;
            log::info!("svm grid: C = {}, gamma = {}, cv accuracy {:.4}", g.c, g.gamma, g.cv_accuracy);
            Ok(ClassifierParams::Svm { c: g.c, gamma: g.gamma })
        }
        ClassifierKind::Mlp => {
            let base = ClassifierParams::mlp_config(reducer.pca.r(), 0.3, 1e-4, grid.mlp_cv_epochs, seed);
            let t = cv_tune_mlp(&z, y, &grid.mlp_dropout, &grid.mlp_l2, grid.folds, seed, &base)?;
            log::info!("mlp grid: dropout = {}, l2 = {}, cv accuracy {:.4}", t.dropout, t.l2, t.cv_accuracy);
            let epochs = match ClassifierParams::default_for(ClassifierKind::Mlp) {
                ClassifierParams::Mlp { epochs, .. } => epochs,
                _ => unreachable!(),
            };
            Ok(ClassifierParams::Mlp {
                dropout: t.dropout,
                l2: t.l2,
                epochs,
                seed,
            })
        }
    }
}
