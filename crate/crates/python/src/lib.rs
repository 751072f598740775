//! Python bindings. Images are nested lists (rows of floats); labels are
//! integers 1..=5.

use std::path::PathBuf;

use alqa::active::slice_margin as margin;
use alqa::corpus::{generate_corpus, load_database, save_database, split_database, CorpusConfig, SplitRatios};
use alqa::eval::{accuracy as acc, rater_agreement, roc_auc_ovr, RaterPanel, Weighting};
use alqa::features::{FeatureExtractor, FeatureManifest, SliceRef};
use alqa::pipeline::{ClassifierKind, ClassifierParams, QualityModel};
use alqa::reduction::fit_pca;
use alqa::segmentation::{chan_vese, SegmentationConfig};
use alqa::{AlqaError, LikertClass, TestCaseDatabase, NUM_CLASSES};
use ndarray::Array2;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

fn err(e: AlqaError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_array<T: Clone>(rows: &[Vec<T>]) -> PyResult<Array2<T>> {
    let w = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != w) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Array2::from_shape_vec((rows.len(), w), rows.concat()).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_rows<T: Clone>(a: &Array2<T>) -> Vec<Vec<T>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn classes(values: &[u8]) -> PyResult<Vec<LikertClass>> {
    values.iter().map(|&v| LikertClass::new(v).map_err(err)).collect()
}

/// Names of the slice features, in vector order.
#[pyfunction]
fn feature_names() -> Vec<String> {
    FeatureManifest::default().names()
}

/// Chan-Vese body mask of a slice: (mask, inside mean, outside mean).
#[pyfunction]
fn segment(image: Vec<Vec<f64>>) -> PyResult<(Vec<Vec<bool>>, f64, f64)> {
    let mask = chan_vese(&to_array(&image)?, &SegmentationConfig::default()).map_err(err)?;
    Ok((to_rows(&mask.pixels), mask.c1, mask.c2))
}

/// Feature vector of a slice under a mask (the default manifest).
#[pyfunction]
fn extract_features(image: Vec<Vec<f64>>, mask: Vec<Vec<bool>>) -> PyResult<Vec<f64>> {
    let extractor = FeatureExtractor::new(FeatureManifest::default()).map_err(err)?;
    let source = SliceRef { volume_id: String::new(), slice_index: 0 };
    Ok(extractor.extract(&to_array(&image)?, &to_array(&mask)?, source).map_err(err)?.values)
}

/// Gap between the two largest class probabilities.
#[pyfunction]
fn slice_margin(proba: Vec<f64>) -> PyResult<f64> {
    margin(&proba).map_err(err)
}

#[pyfunction]
fn accuracy(predicted: Vec<u8>, truth: Vec<u8>) -> PyResult<f64> {
    acc(&classes(&predicted)?, &classes(&truth)?).map_err(err)
}

/// One-vs-rest AUC per class; None where a class has no positives or no
/// negatives.
#[pyfunction]
fn roc_auc(scores: Vec<Vec<f64>>, truth: Vec<u8>) -> PyResult<Vec<Option<f64>>> {
    let k = scores.first().map_or(NUM_CLASSES, Vec::len);
    Ok(roc_auc_ovr(&scores, &classes(&truth)?, k).map_err(err)?.into_iter().map(|r| r.auc).collect())
}

/// Weighted Fleiss' kappa of a raters x datasets label matrix.
#[pyfunction]
#[pyo3(signature = (labels, weighting = "quadratic", g = 4))]
fn fleiss_kappa(labels: Vec<Vec<u8>>, weighting: &str, g: u32) -> PyResult<Option<f64>> {
    let w = match weighting {
        "quadratic" => Weighting::Quadratic,
        "linear" => Weighting::Linear,
        "unweighted" => Weighting::Unweighted,
        other => return Err(PyValueError::new_err(format!("unknown weighting {other:?}"))),
    };
    let rows = labels.iter().map(|r| classes(r)).collect::<PyResult<Vec<_>>>()?;
    let panel = RaterPanel::new(rows, g).map_err(err)?;
    Ok(rater_agreement(&panel, &w).map_err(err)?.kappa)
}

/// Principal axes of the rows: (components, eigenvalues).
#[pyfunction]
fn pca(rows: Vec<Vec<f64>>, r: usize) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let m = fit_pca(&rows, r).map_err(err)?;
    Ok((m.components, m.eigenvalues))
}

/// A generated or stored phantom corpus with its splits.
#[pyclass]
struct Corpus {
    db: TestCaseDatabase,
}

#[pymethods]
impl Corpus {
    #[staticmethod]
    #[pyo3(signature = (count, seed = 0, depth = None, size = None))]
    fn generate(count: usize, seed: u64, depth: Option<usize>, size: Option<usize>) -> PyResult<Self> {
        let mut cfg = CorpusConfig { count, seed, ..CorpusConfig::default() };
        if let Some(d) = depth {
            cfg.shape.0 = d;
        }
        if let Some(s) = size {
            cfg.shape.1 = s;
            cfg.shape.2 = s;
        }
        let mut db = generate_corpus(&cfg).map_err(err)?;
        let splits = split_database(&db, SplitRatios::default(), seed).map_err(err)?;
        db.set_splits(splits);
        Ok(Self { db })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { db: load_database(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_database(&self.db, &path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.db.len()
    }

    fn ids(&self) -> Vec<String> {
        self.db.volumes.keys().cloned().collect()
    }

    /// "train", "validation" or "test".
    fn split(&self, id: &str) -> PyResult<&'static str> {
        use alqa::corpus::SplitKind::*;
        match self.db.splits.split_of(id) {
            Some(Train) => Ok("train"),
            Some(Validation) => Ok("validation"),
            Some(Test) => Ok("test"),
            None => Err(PyKeyError::new_err(id.to_string())),
        }
    }

    fn reference(&self, id: &str) -> PyResult<u8> {
        self.db.reference.get(id).map(|c| c.value()).ok_or_else(|| PyKeyError::new_err(id.to_string()))
    }

    fn depth(&self, id: &str) -> PyResult<usize> {
        self.db.volumes.get(id).map(|v| v.depth()).ok_or_else(|| PyKeyError::new_err(id.to_string()))
    }

    fn slice(&self, id: &str, index: usize) -> PyResult<Vec<Vec<f64>>> {
        let v = self.db.volumes.get(id).ok_or_else(|| PyKeyError::new_err(id.to_string()))?;
        if index >= v.depth() {
            return Err(PyValueError::new_err(format!("{id} has {} slices", v.depth())));
        }
        Ok(to_rows(&v.slice(index)))
    }
}

/// Standardizer, PCA and slice classifier.
#[pyclass]
struct Model {
    inner: QualityModel,
}

#[pymethods]
impl Model {
    /// Fits on slice rows with their labels. `kind` is "svm" or "mlp";
    /// hyperparameters are the pipeline defaults.
    #[staticmethod]
    #[pyo3(signature = (rows, labels, kind = "svm", r = None, seed = 0))]
    fn train(rows: Vec<Vec<f64>>, labels: Vec<u8>, kind: &str, r: Option<usize>, seed: u64) -> PyResult<Self> {
        let kind: ClassifierKind = kind.parse().map_err(err)?;
        let params = match ClassifierParams::default_for(kind) {
            ClassifierParams::Mlp { dropout, l2, epochs, .. } => ClassifierParams::Mlp { dropout, l2, epochs, seed },
            p => p,
        };
        let r = r.unwrap_or_else(|| kind.default_r());
        let inner = QualityModel::fit(&rows, &classes(&labels)?, r, &params, None).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: QualityModel::load(&path).map_err(err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    fn slice_proba(&self, row: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.slice_proba(&row).map_err(err)
    }

    /// Dataset class by majority vote over slices, with the mean slice
    /// probabilities.
    fn predict_dataset(&self, slices: Vec<Vec<f64>>) -> PyResult<(u8, Vec<f64>)> {
        let p = self.inner.predict_dataset(&slices).map_err(err)?;
        Ok((p.class.value(), p.mean_proba))
    }
}

#[pymodule]
fn alqa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(slice_margin, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(fleiss_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(pca, m)?)?;
    m.add_class::<Corpus>()?;
    m.add_class::<Model>()?;
    Ok(())
}
