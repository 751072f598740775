//! Synthetic test-case database: phantom volumes with controlled artifacts,
//! oracle severities, pool membership and patient-disjoint splits.

mod artifact;
mod generate;
mod oracle;
mod phantom;
mod split;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ndarray::{Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{AlqaError, Result};

pub use artifact::{inject_artifact, ArtifactKind, ArtifactSpec};
pub use generate::{generate_corpus, CorpusConfig};
pub use oracle::{oracle_label, severity_score, simulate_raters, OracleConfig, Thresholds};
pub use phantom::{generate_phantom, BodyOutline, BodySpec, PhantomSpec, Structure};
pub use split::{split_database, SplitRatios};
pub use store::{load_database, load_volume, save_database, save_index, volume_dir, write_atomic, DB_FORMAT_VERSION};

/// Number of quality classes on the Likert scale.
pub const NUM_CLASSES: usize = 5;

/// A 5-point Likert quality class, 1 = very good, 5 = very poor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct LikertClass(u8);

impl LikertClass {
    pub const BEST: LikertClass = LikertClass(1);
    pub const WORST: LikertClass = LikertClass(NUM_CLASSES as u8);

    pub fn new(value: u8) -> Result<Self> {
        if (1..=NUM_CLASSES as u8).contains(&value) {
            Ok(Self(value))
        } else {
            Err(AlqaError::Parameter(format!(
                "Likert class {value} outside [1, {NUM_CLASSES}]"
            )))
        }
    }

    /// From a zero-based class index.
    pub fn from_index(index: usize) -> Result<Self> {
        Self::new((index + 1).min(u8::MAX as usize) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = LikertClass> {
        (1..=NUM_CLASSES as u8).map(LikertClass)
    }

    /// One step up or down, clamped to the scale.
    pub fn shifted(self, delta: i32) -> Self {
        let v = (self.0 as i32 + delta).clamp(1, NUM_CLASSES as i32);
        Self(v as u8)
    }
}

impl TryFrom<u8> for LikertClass {
    type Error = AlqaError;
    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LikertClass> for u8 {
    fn from(c: LikertClass) -> u8 {
        c.0
    }
}

impl fmt::Display for LikertClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One complete image series, the unit that receives a quality label.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageVolume {
    pub id: String,
    pub patient_id: String,
    /// depth x height x width, C order.
    pub voxels: Array3<f32>,
    /// (dz, dy, dx)
    pub spacing: (f64, f64, f64),
    pub provenance: PhantomSpec,
}

impl ImageVolume {
    pub fn depth(&self) -> usize {
        self.voxels.dim().0
    }

    pub fn slice_shape(&self) -> (usize, usize) {
        let (_, h, w) = self.voxels.dim();
        (h, w)
    }

    pub fn slice_view(&self, index: usize) -> ArrayView2<'_, f32> {
        self.voxels.index_axis(Axis(0), index)
    }

    /// A slice promoted to f64 for processing.
    pub fn slice(&self, index: usize) -> Array2<f64> {
        self.slice_view(index).mapv(f64::from)
    }

    pub fn validate(&self) -> Result<()> {
        let (d, h, w) = self.voxels.dim();
        if d < 1 || h < 8 || w < 8 {
            return Err(AlqaError::Shape(format!(
                "volume {} has shape {d}x{h}x{w}; need depth >= 1 and height, width >= 8",
                self.id
            )));
        }
        if self.voxels.iter().any(|v| !v.is_finite()) {
            return Err(AlqaError::NonFinite(format!("volume {}", self.id)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: BTreeSet<String>,
    pub validation: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl Splits {
    pub fn split_of(&self, id: &str) -> Option<SplitKind> {
        if self.train.contains(id) {
            Some(SplitKind::Train)
        } else if self.validation.contains(id) {
            Some(SplitKind::Validation)
        } else if self.test.contains(id) {
            Some(SplitKind::Test)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Train,
    Validation,
    Test,
}

/// The pool X = U ∪ L over the training split, plus held-out splits and the
/// reference labels used for retrospective evaluation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TestCaseDatabase {
    pub volumes: BTreeMap<String, ImageVolume>,
    pub unlabeled: BTreeSet<String>,
    pub labeled: BTreeMap<String, LikertClass>,
    pub splits: Splits,
    /// Fused rater labels for every volume. Never shown to a human rater.
    pub reference: BTreeMap<String, LikertClass>,
}

impl TestCaseDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, volume: ImageVolume) -> Result<()> {
        volume.validate()?;
        if self.volumes.contains_key(&volume.id) {
            return Err(AlqaError::Parameter(format!(
                "duplicate volume id {}",
                volume.id
            )));
        }
        self.volumes.insert(volume.id.clone(), volume);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    /// Install splits and reset the pools: U = train, L = ∅.
    pub fn set_splits(&mut self, splits: Splits) {
        self.unlabeled = splits.train.clone();
        self.labeled.clear();
        self.splits = splits;
    }

    /// Move a dataset from U to L.
    pub fn label(&mut self, id: &str, class: LikertClass) -> Result<()> {
        if !self.unlabeled.remove(id) {
            return Err(AlqaError::Parameter(format!(
                "dataset {id} is not in the unlabeled pool"
            )));
        }
        self.labeled.insert(id.to_string(), class);
        Ok(())
    }

    /// U ∩ L = ∅ and U ∪ L = train split.
    pub fn check_pools(&self) -> Result<()> {
        if let Some(id) = self.unlabeled.iter().find(|id| self.labeled.contains_key(*id)) {
            return Err(AlqaError::Parameter(format!("{id} is both labeled and unlabeled")));
        }
        let union: BTreeSet<&String> = self.unlabeled.iter().chain(self.labeled.keys()).collect();
        let train: BTreeSet<&String> = self.splits.train.iter().collect();
        if union != train {
            return Err(AlqaError::Parameter(
                "pools do not partition the training split".into(),
            ));
        }
        Ok(())
    }

    pub fn patients(&self) -> BTreeSet<&str> {
        self.volumes.values().map(|v| v.patient_id.as_str()).collect()
    }
}
